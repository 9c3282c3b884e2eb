//! Analysis-ready model frames: a count response plus named numeric and
//! categorical covariates, with no missing cells.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// A categorical column stored as codes into a lexicographically ordered
/// level set. Only levels that actually occur are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub levels: Vec<String>,
    pub codes: Vec<usize>,
}

impl CategoricalColumn {
    pub fn from_labels<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Self {
        let levels: Vec<String> = labels
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = labels
            .iter()
            .map(|s| {
                levels
                    .binary_search_by(|l| l.as_str().cmp(s.as_ref()))
                    .expect("label drawn from level set")
            })
            .collect();
        CategoricalColumn {
            name: name.into(),
            levels,
            codes,
        }
    }

    pub fn label(&self, row: usize) -> &str {
        &self.levels[self.codes[row]]
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFrame {
    pub response_name: String,
    pub response: Vec<u32>,
    pub numeric: Vec<NumericColumn>,
    pub categorical: Vec<CategoricalColumn>,
    /// Indices of the source rows, strictly increasing.
    pub observation_ids: Vec<usize>,
    /// Rows dropped because a log transform met a zero count.
    pub excluded_log_zero: usize,
}

impl ModelFrame {
    pub fn new(
        response_name: impl Into<String>,
        response: Vec<u32>,
        numeric: Vec<NumericColumn>,
        categorical: Vec<CategoricalColumn>,
        observation_ids: Vec<usize>,
    ) -> Result<Self> {
        let n = response.len();
        if observation_ids.len() != n {
            return Err(Error::Design(
                "observation id count differs from response length".into(),
            ));
        }
        if observation_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Design(
                "observation ids must be strictly increasing".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for col in &numeric {
            if col.values.len() != n {
                return Err(Error::Design(format!(
                    "column `{}` has wrong length",
                    col.name
                )));
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Design(format!(
                    "column `{}` has non-finite cells",
                    col.name
                )));
            }
            if !seen.insert(col.name.clone()) {
                return Err(Error::Design(format!("duplicate column `{}`", col.name)));
            }
        }
        for col in &categorical {
            if col.codes.len() != n {
                return Err(Error::Design(format!(
                    "column `{}` has wrong length",
                    col.name
                )));
            }
            if !seen.insert(col.name.clone()) {
                return Err(Error::Design(format!("duplicate column `{}`", col.name)));
            }
        }
        Ok(ModelFrame {
            response_name: response_name.into(),
            response,
            numeric,
            categorical,
            observation_ids,
            excluded_log_zero: 0,
        })
    }

    /// Frame with sequential ids `0..n`; handy for synthetic data.
    pub fn with_sequential_ids(
        response_name: impl Into<String>,
        response: Vec<u32>,
        numeric: Vec<NumericColumn>,
        categorical: Vec<CategoricalColumn>,
    ) -> Result<Self> {
        let ids = (0..response.len()).collect();
        Self::new(response_name, response, numeric, categorical, ids)
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn term_kind(&self, name: &str) -> Option<TermKind> {
        if self.numeric.iter().any(|c| c.name == name) {
            Some(TermKind::Numeric)
        } else if self.categorical.iter().any(|c| c.name == name) {
            Some(TermKind::Categorical)
        } else {
            None
        }
    }

    pub fn numeric_column(&self, name: &str) -> Option<&NumericColumn> {
        self.numeric.iter().find(|c| c.name == name)
    }

    pub fn categorical_column(&self, name: &str) -> Option<&CategoricalColumn> {
        self.categorical.iter().find(|c| c.name == name)
    }

    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.observation_ids.binary_search(&id).ok()
    }

    /// Keeps the rows whose observation id satisfies `keep`. Categorical
    /// level sets are recomputed so vanished levels disappear.
    pub fn filter_ids(&self, mut keep: impl FnMut(usize) -> bool) -> ModelFrame {
        let rows: Vec<usize> = (0..self.n_obs())
            .filter(|&i| keep(self.observation_ids[i]))
            .collect();
        let numeric = self
            .numeric
            .iter()
            .map(|c| NumericColumn {
                name: c.name.clone(),
                values: rows.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        let categorical = self
            .categorical
            .iter()
            .map(|c| {
                let labels: Vec<&str> = rows.iter().map(|&i| c.label(i)).collect();
                CategoricalColumn::from_labels(c.name.clone(), &labels)
            })
            .collect();
        ModelFrame {
            response_name: self.response_name.clone(),
            response: rows.iter().map(|&i| self.response[i]).collect(),
            numeric,
            categorical,
            observation_ids: rows.iter().map(|&i| self.observation_ids[i]).collect(),
            excluded_log_zero: self.excluded_log_zero,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_are_sorted_and_codes_index_them() {
        let c = CategoricalColumn::from_labels("team", &["Leeds", "Arsenal", "Chelsea", "Arsenal"]);
        assert_eq!(c.levels, vec!["Arsenal", "Chelsea", "Leeds"]);
        assert_eq!(c.codes, vec![2, 0, 1, 0]);
        assert_eq!(c.label(0), "Leeds");
    }

    #[test]
    fn filter_recomputes_levels() {
        let frame = ModelFrame::with_sequential_ids(
            "y",
            vec![1, 2, 3],
            vec![NumericColumn {
                name: "x".into(),
                values: vec![0.1, 0.2, 0.3],
            }],
            vec![CategoricalColumn::from_labels("g", &["a", "b", "a"])],
        )
        .unwrap();
        let sub = frame.filter_ids(|id| id != 1);
        assert_eq!(sub.observation_ids, vec![0, 2]);
        assert_eq!(sub.response, vec![1, 3]);
        assert_eq!(sub.categorical[0].levels, vec!["a"]);
        assert_eq!(sub.numeric[0].values, vec![0.1, 0.3]);
    }

    #[test]
    fn rejects_unsorted_ids_and_ragged_columns() {
        assert!(ModelFrame::new("y", vec![1, 2], vec![], vec![], vec![3, 1]).is_err());
        let ragged = NumericColumn {
            name: "x".into(),
            values: vec![1.0],
        };
        assert!(ModelFrame::with_sequential_ids("y", vec![1, 2], vec![ragged], vec![]).is_err());
    }
}
