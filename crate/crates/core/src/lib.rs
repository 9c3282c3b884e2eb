//! Poisson regression toolkit for home-team goal counts.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`ingest`]: read season CSV files, report and prune missing columns,
//!   summarize, build the model frame.
//! - [`dist_check`]: chi-square test of goal counts against a Poisson law,
//!   globally and per team, and team selection.
//! - [`glm`]: treatment-coded design matrices and Poisson GLM fitting by IRLS.
//! - [`model_search`]: exhaustive subset enumeration, deviance
//!   goodness-of-fit screening and AIC ranking.
//! - [`diagnostics`]: Pearson / standardized residuals, leverage, Q-Q points,
//!   outlier flagging and refits.
//! - [`pipeline`] and [`report`]: configuration, command drivers and the
//!   CSV / aligned-text / SVG writers behind the `goalreg` binary.
//!
//! [`specfun`] holds the scalar special functions everything above relies on.

pub mod diagnostics;
pub mod dist_check;
pub mod error;
pub mod frame;
pub mod glm;
pub mod ingest;
pub mod model_search;
pub mod pipeline;
pub mod report;
pub mod specfun;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/poisson-gof.md")]
    mod poisson_gof {}
    #[doc = include_str!("../../../book/src/irls.md")]
    mod irls {}
    #[doc = include_str!("../../../book/src/model-search.md")]
    mod model_search {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
