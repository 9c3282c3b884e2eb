use super::irls::GlmFit;
use crate::error::{Error, Result};
use crate::specfun::{normal_quantile, normal_sf};

/// One row of a coefficient table. `z` and `p_value` are `None` when the
/// standard error is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefRow {
    pub name: String,
    pub coef: f64,
    pub std_err: f64,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wald statistics for one coefficient at confidence `level`.
pub fn coef_row(name: &str, coef: f64, std_err: f64, level: f64) -> Result<CoefRow> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let crit = normal_quantile(1.0 - (1.0 - level) / 2.0)?;
    let (z, p_value) = if std_err > 0.0 {
        let z = coef / std_err;
        (Some(z), Some((2.0 * normal_sf(z.abs()).get()).min(1.0)))
    } else {
        (None, None)
    };
    Ok(CoefRow {
        name: name.to_string(),
        coef,
        std_err,
        z,
        p_value,
        ci_low: coef - crit * std_err,
        ci_high: coef + crit * std_err,
    })
}

pub fn summarize(fit: &GlmFit, level: f64) -> Result<Vec<CoefRow>> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    fit.column_names
        .iter()
        .zip(fit.coefficients.iter())
        .zip(fit.std_errors())
        .map(|((name, &coef), se)| coef_row(name, coef, se, level))
        .collect()
}
