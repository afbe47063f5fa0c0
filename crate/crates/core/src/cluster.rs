//! K-means (Lloyd's algorithm) and per-cluster profiling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, FeatureTable};
use crate::model::{ForestModel, ModelError};
use crate::rng::stream;
use crate::stats::squared_distance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Assign every point to a uniformly random cluster, then iterate.
    #[default]
    RandomPartition,
    #[serde(rename = "kmeanspp")]
    KMeansPlusPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub n_restarts: usize,
    pub init: Init,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 20,
            max_iter: 300,
            seed: 0,
            n_restarts: 10,
            init: Init::RandomPartition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("k = {k} but only {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("k and n_restarts must be at least 1")]
    InvalidConfig,
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("{0} rows in the feature table but {1} cluster assignments")]
    RowMismatch(usize, usize),
    #[error("model features missing from table: {}", .0.join(", "))]
    MissingModelFeatures(Vec<String>),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Flagged-product statistics per cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedProfile {
    pub count: Vec<usize>,
    /// `count / size` per cluster.
    pub share: Vec<f64>,
    /// Fraction of all flagged products that fall in each cluster.
    pub share_of_flagged: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Cluster id of each input row.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Total within-cluster sum of squared Euclidean distances.
    pub objective: f64,
    pub sizes: Vec<usize>,
    pub iterations: usize,
    /// Objective after every centroid update of the winning restart.
    pub objective_trace: Vec<f64>,
    /// Final objective of every restart.
    pub restart_objectives: Vec<f64>,
    /// Mean of every feature column per cluster, filled by [`profile_clusters`].
    pub feature_means: Option<Vec<Vec<f64>>>,
    pub flagged: Option<FlaggedProfile>,
}

struct Run {
    assign: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    objective: f64,
    trace: Vec<f64>,
    iterations: usize,
}

fn centroids_of(x: &[Vec<f64>], assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let p = x[0].len();
    let mut c = vec![vec![0.0; p]; k];
    let mut n = vec![0usize; k];
    for (row, &a) in x.iter().zip(assign) {
        n[a] += 1;
        c[a].iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    for (ci, &ni) in c.iter_mut().zip(&n) {
        if ni > 0 {
            ci.iter_mut().for_each(|s| *s /= ni as f64);
        }
    }
    c
}

fn sizes_of(assign: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    assign.iter().for_each(|&a| s[a] += 1);
    s
}

/// Moves the point farthest from its own centroid into each empty cluster,
/// taking only from clusters that keep at least one point.
fn repair_empty(x: &[Vec<f64>], assign: &mut [usize], k: usize) {
    loop {
        let sizes = sizes_of(assign, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let c = centroids_of(x, assign, k);
        let mut far: Option<(usize, f64)> = None;
        for (i, row) in x.iter().enumerate() {
            if sizes[assign[i]] < 2 {
                continue;
            }
            let d = squared_distance(row, &c[assign[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= n leaves a cluster with two points");
        assign[i] = empty;
    }
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn objective(x: &[Vec<f64>], assign: &[usize], centroids: &[Vec<f64>]) -> f64 {
    x.iter()
        .zip(assign)
        .map(|(row, &a)| squared_distance(row, &centroids[a]))
        .sum()
}

fn initial_assignment<R: Rng>(x: &[Vec<f64>], cfg: &KMeansConfig, rng: &mut R) -> Vec<usize> {
    let k = cfg.k;
    match cfg.init {
        Init::RandomPartition => (0..x.len()).map(|_| rng.random_range(0..k)).collect(),
        Init::KMeansPlusPlus => {
            let mut centers = vec![x[rng.random_range(0..x.len())].clone()];
            let mut d2: Vec<f64> = x.iter().map(|r| squared_distance(r, &centers[0])).collect();
            while centers.len() < k {
                let total: f64 = d2.iter().sum();
                let next = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut pick = x.len() - 1;
                    for (i, &d) in d2.iter().enumerate() {
                        if target < d {
                            pick = i;
                            break;
                        }
                        target -= d;
                    }
                    pick
                } else {
                    rng.random_range(0..x.len())
                };
                centers.push(x[next].clone());
                for (d, r) in d2.iter_mut().zip(x) {
                    *d = d.min(squared_distance(r, centers.last().unwrap()));
                }
            }
            x.iter().map(|r| nearest(r, &centers)).collect()
        }
    }
}

fn lloyd(x: &[Vec<f64>], cfg: &KMeansConfig, restart: usize) -> Run {
    let mut rng = stream(cfg.seed, restart as u64);
    let mut assign = initial_assignment(x, cfg, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        repair_empty(x, &mut assign, cfg.k);
        let centroids = centroids_of(x, &assign, cfg.k);
        let obj = objective(x, &assign, &centroids);
        trace.push(obj);
        let next: Vec<usize> = x.iter().map(|r| nearest(r, &centroids)).collect();
        if next == assign || iterations >= cfg.max_iter {
            return Run {
                assign,
                centroids,
                objective: obj,
                trace,
                iterations,
            };
        }
        assign = next;
        iterations += 1;
    }
}

/// Lexicographic row order so the random initial partition does not depend
/// on input order.
fn canonical_order(x: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    order
}

/// Best of `n_restarts` Lloyd runs by objective (ties to the earliest run).
pub fn kmeans(x: &[Vec<f64>], cfg: &KMeansConfig) -> Result<ClusterReport, ClusterError> {
    if cfg.k == 0 || cfg.n_restarts == 0 {
        return Err(ClusterError::InvalidConfig);
    }
    if cfg.k > x.len() {
        return Err(ClusterError::TooManyClusters { k: cfg.k, n: x.len() });
    }
    for (row, r) in x.iter().enumerate() {
        if let Some(column) = r.iter().position(|v| !v.is_finite()) {
            return Err(ClusterError::NonFinite { row, column });
        }
    }
    let order = canonical_order(x);
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();

    #[cfg(feature = "parallel")]
    let runs: Vec<Run> = {
        use rayon::prelude::*;
        (0..cfg.n_restarts).into_par_iter().map(|r| lloyd(&sorted, cfg, r)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Run> = (0..cfg.n_restarts).map(|r| lloyd(&sorted, cfg, r)).collect();

    let mut best: Option<Run> = None;
    let mut restart_objectives = Vec::with_capacity(cfg.n_restarts);
    for run in runs {
        restart_objectives.push(run.objective);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut assignments = vec![0; x.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = best.assign[pos];
    }
    Ok(ClusterReport {
        sizes: sizes_of(&assignments, cfg.k),
        assignments,
        centroids: best.centroids,
        objective: best.objective,
        iterations: best.iterations,
        objective_trace: best.trace,
        restart_objectives,
        feature_means: None,
        flagged: None,
    })
}

/// Adds per-cluster feature means over every column of `table` (rows aligned
/// with the clustered rows) and, with a model, flagged counts and shares.
pub fn profile_clusters(
    mut report: ClusterReport,
    table: &FeatureTable,
    model: Option<&ForestModel>,
) -> Result<ClusterReport, ClusterError> {
    if table.n_rows() != report.assignments.len() {
        return Err(ClusterError::RowMismatch(table.n_rows(), report.assignments.len()));
    }
    let k = report.sizes.len();
    let p = table.columns.len();
    let mut means = vec![vec![0.0; p]; k];
    for (row, &a) in table.rows.iter().zip(&report.assignments) {
        means[a].iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    for (m, &s) in means.iter_mut().zip(&report.sizes) {
        if s > 0 {
            m.iter_mut().for_each(|v| *v /= s as f64);
        }
    }
    report.feature_means = Some(means);

    if let Some(model) = model {
        let missing: Vec<String> = model
            .feature_names
            .iter()
            .filter(|f| table.column_index(f).is_none())
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(ClusterError::MissingModelFeatures(missing));
        }
        let labels = model.predict_table(table)?;
        let mut count = vec![0usize; k];
        for (&a, &l) in report.assignments.iter().zip(&labels) {
            count[a] += usize::from(l);
        }
        let total: usize = count.iter().sum();
        let share = count
            .iter()
            .zip(&report.sizes)
            .map(|(&c, &s)| if s == 0 { 0.0 } else { c as f64 / s as f64 })
            .collect();
        let share_of_flagged = count
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        report.flagged = Some(FlaggedProfile {
            count,
            share,
            share_of_flagged,
        });
    }
    Ok(report)
}
