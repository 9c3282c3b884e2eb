//! Exhaustive subset search: every nonempty subset of the candidate
//! variables is fitted, screened by the deviance goodness-of-fit test and
//! ranked by AIC.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::ModelFrame;
use crate::glm::{build_design, irls_fit, Formula, IrlsOptions};
use crate::specfun::chi2_sf;

/// The default variable universe, in table order.
pub const DEFAULT_VARIABLES: [&str; 6] = ["HTAG", "logHST", "logHC", "HR", "AR", "HomeTeam"];

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionEntry {
    /// Terms joined by `" + "`.
    pub model: String,
    pub n_params: usize,
    pub deviance: f64,
    pub pearson_chi2: f64,
    pub llf: f64,
    pub df_resid: usize,
    pub aic: f64,
    /// `chi2_sf(deviance, df_resid)`, filled in by [`gof_filter`].
    pub p_chisq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedFit {
    pub model: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionTable {
    pub entries: Vec<SelectionEntry>,
    pub failures: Vec<FailedFit>,
}

impl SelectionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&SelectionEntry> {
        self.entries.first()
    }
}

/// All `2^k − 1` nonempty subsets, by size then in the given variable order.
pub fn enumerate_formulas<S: AsRef<str>>(response: &str, variables: &[S]) -> Result<Vec<Formula>> {
    if variables.is_empty() {
        return Err(Error::Config("variable universe is empty".into()));
    }
    let vars: Vec<&str> = variables.iter().map(AsRef::as_ref).collect();
    if !vars.iter().all_unique() {
        return Err(Error::Config("variable universe has duplicates".into()));
    }
    (1..=vars.len())
        .flat_map(|size| vars.iter().copied().combinations(size))
        .map(|terms| Formula::new(response, terms))
        .collect()
}

/// Fits every formula on up to `workers` threads (0 = rayon default).
/// Output order follows `formulas` regardless of completion order.
pub fn fit_all(
    frame: &ModelFrame,
    formulas: &[Formula],
    opts: IrlsOptions,
    workers: usize,
) -> Result<SelectionTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<std::result::Result<SelectionEntry, FailedFit>> = pool.install(|| {
        formulas
            .par_iter()
            .map(|formula| {
                let model = formula.label();
                build_design(frame, formula)
                    .and_then(|(x, y)| irls_fit(&x, &y, opts))
                    .map(|fit| SelectionEntry {
                        model: model.clone(),
                        n_params: fit.n_params(),
                        deviance: fit.deviance,
                        pearson_chi2: fit.pearson_chi2,
                        llf: fit.llf,
                        df_resid: fit.df_resid,
                        aic: fit.aic,
                        p_chisq: None,
                    })
                    .map_err(|e| FailedFit {
                        model,
                        reason: e.to_string(),
                    })
            })
            .collect()
    });
    let mut table = SelectionTable::default();
    for outcome in outcomes {
        match outcome {
            Ok(entry) => table.entries.push(entry),
            Err(failure) => {
                log::warn!("fit of `{}` failed: {}", failure.model, failure.reason);
                table.failures.push(failure);
            }
        }
    }
    Ok(table)
}

/// Keeps the rows whose deviance goodness-of-fit p-value is at least `alpha`.
pub fn gof_filter(table: &SelectionTable, alpha: f64) -> Result<SelectionTable> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1)")));
    }
    let mut entries = Vec::with_capacity(table.entries.len());
    for e in &table.entries {
        let p = chi2_sf(e.deviance, e.df_resid as f64)?.get();
        if p >= alpha {
            entries.push(SelectionEntry {
                p_chisq: Some(p),
                ..e.clone()
            });
        }
    }
    Ok(SelectionTable {
        entries,
        failures: table.failures.clone(),
    })
}

/// Stable ascending sort by AIC; ties go to fewer parameters, then the model
/// label.
pub fn rank_by_aic(table: &SelectionTable) -> SelectionTable {
    let mut entries = table.entries.clone();
    entries.sort_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .unwrap_or(Ordering::Equal)
            .then(a.n_params.cmp(&b.n_params))
            .then_with(|| a.model.cmp(&b.model))
    });
    SelectionTable {
        entries,
        failures: table.failures.clone(),
    }
}
