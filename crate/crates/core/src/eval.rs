//! Train/test splitting, standardization and classification metrics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, FeatureTable};
use crate::model::{train_on_table, ForestConfig, ModelError};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("test fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("split leaves the {0} side empty")]
    EmptySide(&'static str),
    #[error("feature set {0:?} is listed twice")]
    DuplicateSet(String),
    #[error("feature set {0:?} has no columns")]
    EmptySet(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_labels(n_scores: usize, labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if n_scores != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: n_scores,
            labels: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    Ok((pos, neg))
}

/// Row indices of a train/test partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
    /// Preserve the class ratio on both sides.
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
            stratified: false,
        }
    }
}

/// Random partition of `labels.len()` rows: `floor(n (1 - f))` train rows,
/// the rest test. Both index lists come back sorted.
pub fn split(labels: &[u8], cfg: &SplitConfig) -> Result<Split, EvalError> {
    let f = cfg.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(EvalError::BadFraction(f));
    }
    check_labels(labels.len(), labels)?;
    let n = labels.len();
    let n_train = libm::floor(n as f64 * (1.0 - f)) as usize;
    if n_train == 0 {
        return Err(EvalError::EmptySide("train"));
    }
    if n_train == n {
        return Err(EvalError::EmptySide("test"));
    }
    let mut rng = stream(cfg.seed, 0);
    let (mut train, mut test) = if cfg.stratified {
        let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            by_class[usize::from(l)].push(i);
        }
        // largest-remainder allocation of the train quota across classes
        let exact: [f64; 2] = [0, 1].map(|c| by_class[c].len() as f64 * n_train as f64 / n as f64);
        let mut quota = exact.map(|e| libm::floor(e) as usize);
        let short = n_train - quota[0] - quota[1];
        if short > 0 {
            let c = if exact[1] - quota[1] as f64 > exact[0] - quota[0] as f64 { 1 } else { 0 };
            quota[c] += short;
        }
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for c in 0..2 {
            by_class[c].shuffle(&mut rng);
            train.extend_from_slice(&by_class[c][..quota[c]]);
            test.extend_from_slice(&by_class[c][quota[c]..]);
        }
        (train, test)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let test = idx.split_off(n_train);
        (idx, test)
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Per-column z-scoring learned from training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean = alloc::vec![0.0; p];
        let mut std = alloc::vec![0.0; p];
        for j in 0..p {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = libm::sqrt(var);
        }
        let zero_variance = mean
            .iter()
            .zip(&std)
            .map(|(m, s)| *s <= 1e-12 * libm::fabs(*m).max(1.0))
            .collect();
        Self {
            mean,
            std,
            zero_variance,
        }
    }

    /// `(x - mean) / std`; zero-variance columns map to 0.
    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if self.zero_variance[j] {
                            0.0
                        } else {
                            (v - self.mean[j]) / self.std[j]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Area under the ROC curve as the Mann–Whitney statistic,
/// `P(s+ > s-) + P(s+ = s-) / 2`, computed from midranks.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, neg) = check_labels(scores.len(), labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let midrank = (i + j + 2) as f64 / 2.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += midrank * tied_pos as f64;
        i = j + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points at every distinct score, threshold descending, starting from
/// `(+inf, 0, 0)`. A row is predicted positive when `score >= threshold`.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>, EvalError> {
    let (pos, neg) = check_labels(scores.len(), labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = alloc::vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub accuracy: f64,
    pub tnr: f64,
    pub tpr: f64,
    pub f1: f64,
    pub precision: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub r#fn: usize,
    pub threshold: f64,
    pub roc: Vec<RocPoint>,
}

/// Confusion counts and the five measures at `threshold` (positive when
/// `score >= threshold`). F1 and precision are 0 when undefined.
pub fn classification_report(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<EvalReport, EvalError> {
    let (pos, neg) = check_labels(scores.len(), labels)?;
    let (mut tp, mut fp) = (0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        if s >= threshold {
            if l == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let (fn_, tn) = (pos - tp, neg - fp);
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let tpr = tp as f64 / pos as f64;
    let f1 = if precision + tpr == 0.0 {
        0.0
    } else {
        2.0 * precision * tpr / (precision + tpr)
    };
    Ok(EvalReport {
        auc: auc(scores, labels)?,
        accuracy: (tp + tn) as f64 / labels.len() as f64,
        tnr: tn as f64 / neg as f64,
        tpr,
        f1,
        precision,
        tp,
        fp,
        tn,
        r#fn: fn_,
        threshold,
        roc: roc_curve(scores, labels)?,
    })
}

/// A named list of feature columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub name: String,
    pub columns: Vec<String>,
}

/// Resolves built-in group names (`network`, `top2_network`, `metadata`,
/// `text`, `image`, `all`) against a table.
pub fn builtin_sets(table: &FeatureTable, names: &[&str]) -> Result<Vec<FeatureSet>, EvalError> {
    names
        .iter()
        .map(|&n| {
            Ok(FeatureSet {
                name: n.to_string(),
                columns: table.group_columns(n)?,
            })
        })
        .collect()
}

/// Result of one feature set in [`compare_feature_sets`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetResult {
    pub name: String,
    pub report: EvalReport,
    pub importances: Vec<(String, f64)>,
}

/// Standardize → train forest → evaluate on the held-out rows, for each
/// feature set, all sharing one split. `labels` is aligned with table rows.
pub fn compare_feature_sets(
    table: &FeatureTable,
    labels: &[u8],
    sets: &[FeatureSet],
    forest: &ForestConfig,
    split_cfg: &SplitConfig,
) -> Result<Vec<SetResult>, EvalError> {
    for (k, s) in sets.iter().enumerate() {
        if s.columns.is_empty() {
            return Err(EvalError::EmptySet(s.name.clone()));
        }
        if sets[..k].iter().any(|o| o.name == s.name) {
            return Err(EvalError::DuplicateSet(s.name.clone()));
        }
    }
    if table.n_rows() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: table.n_rows(),
            labels: labels.len(),
        });
    }
    let sp = split(labels, split_cfg)?;
    let y_train: Vec<u8> = sp.train.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<u8> = sp.test.iter().map(|&i| labels[i]).collect();
    let test_ids: Vec<String> = sp.test.iter().map(|&i| table.product_ids[i].clone()).collect();
    let test_table = table.select_rows(&test_ids)?;
    let mut out = Vec::with_capacity(sets.len());
    for s in sets {
        // the standardizer is fit on training rows only
        let model = train_on_table(table, &sp.train, &y_train, &s.columns, forest)?;
        let scores = model.score_table(&test_table)?;
        out.push(SetResult {
            name: s.name.clone(),
            report: classification_report(&scores, &y_test, 0.5)?,
            importances: model.feature_importances(),
        });
    }
    Ok(out)
}
