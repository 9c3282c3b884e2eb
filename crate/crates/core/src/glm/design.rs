use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::{ModelFrame, TermKind};

/// `response ~ term + term + ...`, always with an intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    pub response: String,
    pub terms: Vec<String>,
}

impl Formula {
    pub fn new<S: Into<String>>(
        response: impl Into<String>,
        terms: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        for (i, t) in terms.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Design("empty term name".into()));
            }
            if terms[..i].contains(t) {
                return Err(Error::Design(format!("duplicate term `{t}`")));
            }
        }
        Ok(Formula {
            response: response.into(),
            terms,
        })
    }

    pub fn intercept_only(response: impl Into<String>) -> Self {
        Formula {
            response: response.into(),
            terms: Vec::new(),
        }
    }

    /// Parses `"y ~ a + b"` or, with `default_response`, a bare `"a + b"`.
    pub fn parse(text: &str, default_response: &str) -> Result<Self> {
        let (response, rhs) = match text.split_once('~') {
            Some((lhs, rhs)) => (lhs.trim(), rhs),
            None => (default_response, text),
        };
        if response.is_empty() {
            return Err(Error::Design(format!("formula `{text}` has no response")));
        }
        let terms: Vec<&str> = rhs
            .split('+')
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != "1")
            .collect();
        Formula::new(response, terms)
    }

    /// Terms joined by `" + "`, the label used in selection tables.
    pub fn label(&self) -> String {
        if self.terms.is_empty() {
            "1".to_string()
        } else {
            self.terms.join(" + ")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ {}", self.response, self.label())
    }
}

/// Dense design matrix with named columns. Column 0 is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub column_names: Vec<String>,
    /// Reference level of each categorical term.
    pub reference_levels: Vec<(String, String)>,
}

impl DesignMatrix {
    /// Wraps a raw matrix. The first column must be all ones.
    pub fn from_matrix(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        if values.ncols() != column_names.len() {
            return Err(Error::Design(
                "column name count differs from matrix width".into(),
            ));
        }
        if values.ncols() == 0 || values.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::Design("first column must be the intercept".into()));
        }
        Ok(DesignMatrix {
            values,
            column_names,
            reference_levels: Vec::new(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Expands a formula against a frame with treatment coding. Column order is
/// the intercept, then each categorical's dummies in level order, then the
/// numeric terms in formula order.
pub fn build_design(frame: &ModelFrame, formula: &Formula) -> Result<(DesignMatrix, Vec<u32>)> {
    if formula.response != frame.response_name {
        return Err(Error::Design(format!(
            "response `{}` not in frame (frame response is `{}`)",
            formula.response, frame.response_name
        )));
    }
    let n = frame.n_obs();
    let mut names = vec!["Intercept".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut reference_levels = Vec::new();

    for term in &formula.terms {
        match frame.term_kind(term) {
            None => return Err(Error::Design(format!("term `{term}` not in frame"))),
            Some(TermKind::Numeric) => {}
            Some(TermKind::Categorical) => {
                let col = frame.categorical_column(term).expect("kind checked");
                if col.levels.len() < 2 {
                    return Err(Error::Design(format!(
                        "categorical `{term}` has a single level; no contrast possible"
                    )));
                }
                reference_levels.push((term.clone(), col.levels[0].clone()));
                for (code, level) in col.levels.iter().enumerate().skip(1) {
                    names.push(format!("{term}[T.{level}]"));
                    columns.push(
                        col.codes
                            .iter()
                            .map(|&c| if c == code { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }
    for term in &formula.terms {
        if let Some(col) = frame.numeric_column(term) {
            names.push(term.clone());
            columns.push(col.values.clone());
        }
    }
    if let Some(pos) = columns.iter().position(|c| c.iter().all(|&v| v == 0.0)) {
        return Err(Error::Design(format!(
            "column `{}` is identically zero",
            names[pos]
        )));
    }
    let values = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    Ok((
        DesignMatrix {
            values,
            column_names: names,
            reference_levels,
        },
        frame.response.clone(),
    ))
}
