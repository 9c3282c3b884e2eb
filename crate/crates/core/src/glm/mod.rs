//! Poisson GLM with log link: formulas, treatment-coded design matrices,
//! IRLS fitting and coefficient summaries.

mod design;
mod irls;
mod summary;
mod wls;

pub use design::{build_design, DesignMatrix, Formula};
pub use irls::{deviance, irls_fit, log_likelihood, pearson_chi2, GlmFit, IrlsOptions};
pub use summary::{coef_row, summarize, CoefRow};
pub use wls::{inverse_gram, solve_wls};

use crate::error::Result;
use crate::frame::ModelFrame;

/// A fit together with the design and data it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub formula: Formula,
    pub design: DesignMatrix,
    pub response: Vec<u32>,
    pub observation_ids: Vec<usize>,
    pub fit: GlmFit,
}

pub fn fit_formula(
    frame: &ModelFrame,
    formula: &Formula,
    opts: IrlsOptions,
) -> Result<FittedModel> {
    let (design, response) = build_design(frame, formula)?;
    let fit = irls_fit(&design, &response, opts)?;
    Ok(FittedModel {
        formula: formula.clone(),
        design,
        response,
        observation_ids: frame.observation_ids.clone(),
        fit,
    })
}
