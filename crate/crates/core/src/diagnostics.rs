//! Residual and influence diagnostics for a fitted Poisson GLM, outlier
//! flagging and refitting without flagged observations.
//!
//! Standardized residuals divide the Pearson residual by `√(1 − h_ii)`,
//! with `h_ii` the diagonal of the weighted hat matrix
//! `√W·X (X'WX)⁻¹ X'·√W`, `W = diag(μ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::ModelFrame;
use crate::glm::{fit_formula, inverse_gram, FittedModel, Formula, GlmFit, IrlsOptions};
use crate::specfun::normal_quantile;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsBundle {
    pub observation_ids: Vec<usize>,
    pub response: Vec<u32>,
    pub fitted_means: Vec<f64>,
    pub pearson_residuals: Vec<f64>,
    pub leverage: Vec<f64>,
    pub standardized_residuals: Vec<f64>,
    pub n_params: usize,
}

pub fn pearson_residuals(y: &[u32], mu: &[f64]) -> Result<Vec<f64>> {
    if y.len() != mu.len() {
        return Err(Error::Domain("response and mean lengths differ".into()));
    }
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| {
            if m > 0.0 {
                Ok((f64::from(yi) - m) / m.sqrt())
            } else {
                Err(Error::Domain(format!("mean must be positive, got {m}")))
            }
        })
        .collect()
}

/// Hat-matrix diagonal, one row at a time.
pub fn leverage(x: &DMatrix<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    if x.nrows() != weights.len() {
        return Err(Error::Domain("design rows and weight count differ".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Domain(format!("weights must be positive, got {w}")));
    }
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("column {j}")).collect();
    let inv = inverse_gram(x, weights, &names)?;
    Ok((0..x.nrows())
        .map(|i| {
            let row = x.row(i);
            let quad = (row * &inv).dot(&row);
            (weights[i] * quad).max(0.0)
        })
        .collect())
}

pub fn standardized_residuals(pearson: &[f64], leverage: &[f64]) -> Result<Vec<f64>> {
    if pearson.len() != leverage.len() {
        return Err(Error::Domain("residual and leverage lengths differ".into()));
    }
    pearson
        .iter()
        .zip(leverage)
        .enumerate()
        .map(|(i, (&r, &h))| {
            if h >= 1.0 {
                Err(Error::DegenerateObservation(i))
            } else {
                Ok(r / (1.0 - h).sqrt())
            }
        })
        .collect()
}

/// Normal Q-Q pairs `(Φ⁻¹((i − ½)/n), r_(i))`.
pub fn qq_points(residuals: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "Q-Q plot needs at least 2 points, got {n}"
        )));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| Ok((normal_quantile((i as f64 + 0.5) / n as f64)?, r)))
        .collect()
}

pub fn diagnose(model: &FittedModel) -> Result<DiagnosticsBundle> {
    let mu = &model.fit.fitted_means;
    let pearson = pearson_residuals(&model.response, mu)?;
    let lev = leverage(&model.design.values, mu)?;
    let standardized = standardized_residuals(&pearson, &lev).map_err(|e| match e {
        Error::DegenerateObservation(i) => Error::DegenerateObservation(model.observation_ids[i]),
        other => other,
    })?;
    Ok(DiagnosticsBundle {
        observation_ids: model.observation_ids.clone(),
        response: model.response.clone(),
        fitted_means: mu.clone(),
        pearson_residuals: pearson,
        leverage: lev,
        standardized_residuals: standardized,
        n_params: model.fit.n_params(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutlierRule {
    /// Use these ids as given (intersected with the bundle's ids).
    Explicit(Vec<usize>),
    /// `|standardized residual| > c`.
    StdResidAbove(f64),
    /// `leverage > m · p / n`.
    LeverageAbove(f64),
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::Explicit(Vec::new())
    }
}

/// Flagged observation ids in ascending order.
pub fn flag_outliers(bundle: &DiagnosticsBundle, rule: &OutlierRule) -> Result<Vec<usize>> {
    let ids = &bundle.observation_ids;
    let mut flagged: Vec<usize> = match rule {
        OutlierRule::Explicit(list) => list
            .iter()
            .copied()
            .filter(|id| {
                let known = ids.binary_search(id).is_ok();
                if !known {
                    log::warn!("observation {id} is not in the fitted data");
                }
                known
            })
            .collect(),
        OutlierRule::StdResidAbove(c) => {
            if !(*c > 0.0) {
                return Err(Error::Config(format!(
                    "residual cutoff must be > 0, got {c}"
                )));
            }
            ids.iter()
                .zip(&bundle.standardized_residuals)
                .filter(|(_, r)| r.abs() > *c)
                .map(|(id, _)| *id)
                .collect()
        }
        OutlierRule::LeverageAbove(m) => {
            if !(*m > 0.0) {
                return Err(Error::Config(format!(
                    "leverage multiple must be > 0, got {m}"
                )));
            }
            let cut = m * bundle.n_params as f64 / ids.len() as f64;
            ids.iter()
                .zip(&bundle.leverage)
                .filter(|(_, h)| **h > cut)
                .map(|(id, _)| *id)
                .collect()
        }
    };
    flagged.sort_unstable();
    flagged.dedup();
    Ok(flagged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefDelta {
    pub name: String,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefitReport {
    pub dropped: Vec<usize>,
    pub before: FittedModel,
    pub after: FittedModel,
    /// Coefficients present in both fits, in the order of the first.
    pub deltas: Vec<CoefDelta>,
}

pub fn refit_without(
    frame: &ModelFrame,
    formula: &Formula,
    drop_ids: &[usize],
    opts: IrlsOptions,
) -> Result<RefitReport> {
    if let Some(id) = drop_ids.iter().find(|id| frame.position_of(**id).is_none()) {
        return Err(Error::UnknownObservation(*id));
    }
    let mut dropped = drop_ids.to_vec();
    dropped.sort_unstable();
    dropped.dedup();

    let before = fit_formula(frame, formula, opts)?;
    let after = if dropped.is_empty() {
        before.clone()
    } else {
        let reduced = frame.filter_ids(|id| dropped.binary_search(&id).is_err());
        let p = before.fit.n_params();
        if reduced.n_obs() <= p {
            return Err(Error::Design(format!(
                "dropping {} rows leaves {} observations for {p} parameters",
                dropped.len(),
                reduced.n_obs()
            )));
        }
        fit_formula(&reduced, formula, opts)?
    };
    let deltas = coefficient_deltas(&before.fit, &after.fit);
    Ok(RefitReport {
        dropped,
        before,
        after,
        deltas,
    })
}

fn coefficient_deltas(before: &GlmFit, after: &GlmFit) -> Vec<CoefDelta> {
    before
        .column_names
        .iter()
        .zip(before.coefficients.iter())
        .filter_map(|(name, &b)| {
            after.coefficient(name).map(|a| CoefDelta {
                name: name.clone(),
                before: b,
                after: a,
                delta: a - b,
            })
        })
        .collect()
}
