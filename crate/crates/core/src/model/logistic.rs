//! L2-penalized logistic regression fitted by gradient ascent.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_training_data, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    /// Penalty weight on the squared coefficient norm (intercept excluded).
    pub l2: f64,
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls to this value.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            max_iter: 100_000,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Gradient of `mean log-likelihood - l2/2 |w|^2`; the intercept gradient
/// comes last.
pub fn objective_gradient(x: &[Vec<f64>], y: &[u8], coef: &[f64], intercept: f64, l2: f64) -> Vec<f64> {
    let p = coef.len();
    let n = x.len() as f64;
    let mut g = vec![0.0; p + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
        let r = f64::from(label) - sigmoid(z);
        for j in 0..p {
            g[j] += r * row[j];
        }
        g[p] += r;
    }
    for j in 0..p {
        g[j] = g[j] / n - l2 * coef[j];
    }
    g[p] /= n;
    g
}

/// Maximizes the mean penalized log-likelihood with fixed step `1/L`, where
/// `L` bounds the curvature.
pub fn train_logistic(
    x: &[Vec<f64>],
    y: &[u8],
    cfg: &LogisticConfig,
) -> Result<LogisticModel, ModelError> {
    if !(cfg.l2 >= 0.0 && cfg.tol > 0.0) {
        return Err(ModelError::InvalidConfig("l2 must be >= 0 and tol > 0"));
    }
    let p = x.first().map_or(0, Vec::len);
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    check_training_data(x, y, &names)?;

    let max_sq = x
        .iter()
        .map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (0.25 * max_sq + cfg.l2);
    let mut coef = vec![0.0; p];
    let mut intercept = 0.0;
    let mut grad_norm = f64::INFINITY;
    for it in 0..=cfg.max_iter {
        let g = objective_gradient(x, y, &coef, intercept, cfg.l2);
        grad_norm = g.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max);
        if grad_norm <= cfg.tol {
            return Ok(LogisticModel {
                coef,
                intercept,
                iterations: it,
            });
        }
        for j in 0..p {
            coef[j] += step * g[j];
        }
        intercept += step * g[p];
    }
    Err(ModelError::NotConverged {
        iterations: cfg.max_iter,
        grad_norm,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        x.iter()
            .map(|row| {
                if row.len() != self.coef.len() {
                    return Err(ModelError::ColumnMismatch {
                        expected: self.coef.len(),
                        got: row.len(),
                    });
                }
                let z = self.intercept + row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>();
                Ok(sigmoid(z))
            })
            .collect()
    }
}
