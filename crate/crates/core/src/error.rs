use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is not numeric")]
    NonNumericColumn(String),

    #[error("unknown team `{0}`")]
    UnknownTeam(String),

    #[error("model frame is empty: {0}")]
    EmptyFrame(String),

    #[error("degenerate bins: {0}")]
    DegenerateBins(String),

    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),

    #[error("design error: {0}")]
    Design(String),

    #[error("singular design; collinear columns: {}", .0.join(", "))]
    SingularDesign(Vec<String>),

    #[error("IRLS diverged: {0}")]
    Divergence(String),

    #[error("fit did not converge")]
    NotConverged,

    #[error("degenerate observation {0}: leverage is 1")]
    DegenerateObservation(usize),

    #[error("unknown observation id {0}")]
    UnknownObservation(usize),

    #[error("output error at {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short, stable class name for machine-readable error lines.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Io { .. } => "io",
            Error::Schema { .. } | Error::Csv { .. } => "schema",
            Error::Config(_) => "config",
            Error::UnknownColumn(_) | Error::NonNumericColumn(_) => "column",
            Error::UnknownTeam(_) => "team",
            Error::EmptyFrame(_) => "empty-frame",
            Error::DegenerateBins(_) | Error::ProbabilitySum(_) => "gof",
            Error::Design(_) => "design",
            Error::SingularDesign(_) => "singular",
            Error::Divergence(_) | Error::NotConverged => "convergence",
            Error::DegenerateObservation(_) | Error::UnknownObservation(_) => "diagnostics",
            Error::Output { .. } => "output",
        }
    }
}
