//! Classifiers: the random forest and a logistic-regression baseline.

pub mod forest;
pub mod logistic;
pub mod tree;

pub use forest::{train_forest, train_on_table, ForestConfig, ForestModel, MaxFeatures, FORMAT_VERSION};
pub use logistic::{objective_gradient, train_logistic, LogisticConfig, LogisticModel};
pub use tree::{Criterion, DecisionTree, Node};

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(&'static str),
    #[error("{rows} feature rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("need at least two training rows")]
    TooFewRows,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("non-finite value in column {column} (row {row})")]
    NonFinite { column: String, row: usize },
    #[error("expected {expected} feature columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error("logistic regression did not converge in {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },
}

pub(crate) fn check_training_data(
    x: &[Vec<f64>],
    y: &[u8],
    names: &[String],
) -> Result<(), ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::ShapeMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(ModelError::TooFewRows);
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(ModelError::BadLabel(bad));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ModelError::SingleClass);
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != names.len() {
            return Err(ModelError::ColumnMismatch {
                expected: names.len(),
                got: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                column: names[j].clone(),
                row: i,
            });
        }
    }
    Ok(())
}
