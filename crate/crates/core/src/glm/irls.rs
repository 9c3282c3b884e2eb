//! Poisson log-link GLM fitted by iteratively reweighted least squares.
//!
//! Each iteration forms the working response `z = η + (y − μ)/μ` with
//! weights `W = diag(μ)` and solves the weighted least-squares problem for
//! the next `β`. For the canonical log link this is exactly Fisher scoring,
//! which coincides with Newton's method on the log-likelihood.
//!
//! Iteration starts from `μ₀ = y + 0.5` and stops when the relative deviance
//! change `|D_t − D_{t−1}| / (|D_t| + 0.1)` drops below `tol`. If a step
//! raises the deviance (or produces non-finite means) after the first
//! iteration, it is halved until the deviance no longer increases.

use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::wls::{inverse_gram, solve_wls};
use crate::error::{Error, Result};
use crate::specfun::ln_gamma_pos;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            max_iter: 25,
            tol: 1e-8,
        }
    }
}

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub column_names: Vec<String>,
    pub coefficients: DVector<f64>,
    /// `(X'WX)⁻¹` at the final means; the Poisson scale is fixed at 1.
    pub covariance: DMatrix<f64>,
    pub fitted_means: Vec<f64>,
    pub deviance: f64,
    pub pearson_chi2: f64,
    pub llf: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    pub df_model: usize,
    pub aic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Deviance after each iteration.
    pub deviance_history: Vec<f64>,
}

impl GlmFit {
    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|j| self.coefficients[j])
    }
}

fn check_pair(y: &[u32], mu: &[f64]) -> Result<()> {
    if y.len() != mu.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} responses, {} means",
            y.len(),
            mu.len()
        )));
    }
    if let Some(m) = mu.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(Error::Domain(format!(
            "means must be positive and finite, got {m}"
        )));
    }
    Ok(())
}

fn llf_unchecked(y: &[u32], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| {
            let yf = f64::from(yi);
            let term = if yi == 0 { 0.0 } else { yf * m.ln() };
            term - m - ln_gamma_pos(yf + 1.0)
        })
        .sum()
}

fn deviance_unchecked(y: &[u32], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&yi, &m)| {
            let yf = f64::from(yi);
            let term = if yi == 0 { 0.0 } else { yf * (yf / m).ln() };
            term - (yf - m)
        })
        .sum::<f64>()
}

fn pearson_unchecked(y: &[u32], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| (f64::from(yi) - m).powi(2) / m)
        .sum()
}

/// Poisson log-likelihood `Σ y ln μ − μ − ln y!`.
pub fn log_likelihood(y: &[u32], mu: &[f64]) -> Result<f64> {
    check_pair(y, mu)?;
    Ok(llf_unchecked(y, mu))
}

/// Poisson deviance `2 Σ [y ln(y/μ) − (y − μ)]`, with `0·ln 0 = 0`.
pub fn deviance(y: &[u32], mu: &[f64]) -> Result<f64> {
    check_pair(y, mu)?;
    Ok(deviance_unchecked(y, mu).max(0.0))
}

/// Pearson statistic `Σ (y − μ)² / μ`.
pub fn pearson_chi2(y: &[u32], mu: &[f64]) -> Result<f64> {
    check_pair(y, mu)?;
    Ok(pearson_unchecked(y, mu))
}

fn means(x: &DMatrix<f64>, beta: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
    let eta: Vec<f64> = (x * beta).iter().copied().collect();
    let mu = eta.iter().map(|e| e.exp()).collect();
    (eta, mu)
}

fn usable(mu: &[f64]) -> bool {
    mu.iter().all(|m| m.is_finite() && *m > 0.0)
}

pub fn irls_fit(design: &DesignMatrix, y: &[u32], opts: IrlsOptions) -> Result<GlmFit> {
    let x = &design.values;
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::Design(format!(
            "{n} design rows but {} responses",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::Design(format!(
            "need more observations ({n}) than parameters ({p})"
        )));
    }
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::Config("IRLS needs max_iter ≥ 1 and tol > 0".into()));
    }
    let names = &design.column_names;
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();

    let mut mu: Vec<f64> = yf.iter().map(|v| v + 0.5).collect();
    let mut eta: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let mut dev = deviance_unchecked(y, &mu);
    let mut beta: Option<DVector<f64>> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        let z: Vec<f64> = (0..n).map(|i| eta[i] + (yf[i] - mu[i]) / mu[i]).collect();
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite working response at iteration {it}"
            )));
        }
        let proposal = solve_wls(x, &mu, &z, names)?;
        let (mut eta_new, mut mu_new) = means(x, &proposal);
        let mut dev_new = if usable(&mu_new) {
            deviance_unchecked(y, &mu_new)
        } else {
            f64::INFINITY
        };
        let mut accepted = proposal;

        if let Some(prev) = &beta {
            let worse = |d: f64| !d.is_finite() || d > dev + 1e-12 * dev.abs().max(1.0);
            let mut halvings = 0;
            while worse(dev_new) {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Divergence(format!(
                        "step halving failed to reduce the deviance at iteration {it}"
                    )));
                }
                accepted = prev + (&accepted - prev) * 0.5;
                (eta_new, mu_new) = means(x, &accepted);
                dev_new = if usable(&mu_new) {
                    deviance_unchecked(y, &mu_new)
                } else {
                    f64::INFINITY
                };
            }
            if halvings > 0 {
                log::debug!("iteration {it}: {halvings} step halvings");
            }
        } else if !dev_new.is_finite() {
            return Err(Error::Divergence(
                "non-finite means after the first iteration".into(),
            ));
        }

        let change = (dev_new - dev).abs() / (dev_new.abs() + 0.1);
        history.push(dev_new);
        beta = Some(accepted);
        eta = eta_new;
        mu = mu_new;
        dev = dev_new;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let mut coefficients = beta.expect("at least one iteration ran");
    if converged {
        // one uncounted polishing step; the stopping rule leaves O(step²) error
        let z: Vec<f64> = (0..n).map(|i| eta[i] + (yf[i] - mu[i]) / mu[i]).collect();
        if let Ok(polished) = solve_wls(x, &mu, &z, names) {
            let (_, mu_new) = means(x, &polished);
            if usable(&mu_new) {
                let dev_new = deviance_unchecked(y, &mu_new);
                if dev_new <= dev {
                    coefficients = polished;
                    mu = mu_new;
                    dev = dev_new;
                }
            }
        }
    } else {
        log::warn!("IRLS stopped after {iterations} iterations without converging");
    }

    let covariance = inverse_gram(x, &mu, names)?;
    let llf = llf_unchecked(y, &mu);
    Ok(GlmFit {
        column_names: names.clone(),
        coefficients,
        covariance,
        deviance: dev.max(0.0),
        pearson_chi2: pearson_unchecked(y, &mu),
        llf,
        n_obs: n,
        df_resid: n - p,
        df_model: p - 1,
        aic: 2.0 * p as f64 - 2.0 * llf,
        iterations,
        converged,
        deviance_history: history,
        fitted_means: mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design(rows: usize, cols: usize, data: &[f64]) -> DesignMatrix {
        let names = (0..cols)
            .map(|j| {
                if j == 0 {
                    "Intercept".to_string()
                } else {
                    format!("x{j}")
                }
            })
            .collect();
        DesignMatrix::from_matrix(DMatrix::from_row_slice(rows, cols, data), names).unwrap()
    }

    #[test]
    fn likelihood_pieces_hand_values() {
        assert_eq!(log_likelihood(&[0], &[1.0]).unwrap(), -1.0);
        let y = [1, 2, 3];
        let mu = [2.0; 3];
        // 3·(−2) + 6·ln 2 − (ln 1! + ln 2! + ln 3!)
        assert!((log_likelihood(&y, &mu).unwrap() - -4.326_024).abs() < 1e-6);
        assert!((deviance(&y, &mu).unwrap() - 1.046_496).abs() < 1e-6);
        assert_relative_eq!(pearson_chi2(&y, &mu).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(pearson_chi2(&[4], &[1.0]).unwrap(), 9.0);
        assert!(deviance(&[0, 3, 5], &[0.0001, 3.0, 5.0]).unwrap() < 1e-3);
        assert_eq!(deviance(&[2, 3], &[2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn precondition_errors() {
        assert!(log_likelihood(&[1], &[0.0]).is_err());
        assert!(deviance(&[1, 2], &[1.0]).is_err());
    }

    #[test]
    fn intercept_only_is_log_mean() {
        let x = design(3, 1, &[1.0, 1.0, 1.0]);
        let fit = irls_fit(&x, &[1, 2, 3], IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[0] - 2f64.ln()).abs() < 1e-10);
        assert!(fit.fitted_means.iter().all(|m| (m - 2.0).abs() < 1e-10));
        assert_eq!((fit.df_resid, fit.df_model), (2, 0));
    }

    #[test]
    fn saturated_indicator_fit() {
        let x = design(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        // n must exceed p; duplicate rows keep the fit saturated per group.
        let x = DesignMatrix::from_matrix(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]),
            x.column_names,
        )
        .unwrap();
        let fit = irls_fit(&x, &[1, 3, 1, 3], IrlsOptions::default()).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-9);
        assert!((fit.coefficients[1] - 3f64.ln()).abs() < 1e-9);
        assert!(fit.deviance < 1e-12);
    }

    #[test]
    fn aic_identity_and_covariance_shape() {
        let x = design(5, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let fit = irls_fit(&x, &[1, 0, 3, 4, 9], IrlsOptions::default()).unwrap();
        assert_eq!(fit.aic, 2.0 * 2.0 - 2.0 * fit.llf);
        assert!(
            (fit.covariance.clone() - fit.covariance.transpose())
                .abs()
                .max()
                < 1e-10
        );
        assert!(fit.covariance.diagonal().iter().all(|v| *v >= 0.0));
        assert_eq!(fit.df_resid + fit.df_model + 1, fit.n_obs);
    }

    #[test]
    fn rejects_too_few_rows_and_collinear_design() {
        let x = design(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(irls_fit(&x, &[1, 2], IrlsOptions::default()).is_err());
        let x = design(
            4,
            3,
            &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 0.5, 1.0],
        );
        assert!(matches!(
            irls_fit(&x, &[1, 2, 3, 0], IrlsOptions::default()),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn all_zero_response_does_not_blow_up() {
        let x = design(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let fit = irls_fit(&x, &[0, 0, 0, 1], IrlsOptions::default()).unwrap();
        assert!(fit.fitted_means.iter().all(|m| *m > 0.0));
        assert!(fit.deviance_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}
