//! Per-product network features: weighted degree, eigenvector centrality,
//! PageRank and the local clustering coefficient.
//!
//! Degree is computed on the shared-reviewer weights `r_ij`; the other three
//! are computed on the binary adjacency `A`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::ProductNetwork;

/// How the PageRank neighbor sum is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageRankVariant {
    /// `p_i = (1-α)/n + α Σ_{j∈N_i} p_j / |N_j|`, dangling mass spread uniformly.
    #[default]
    Standard,
    /// `p_i = (1-α)/n + α Σ_{j∈N_i} p_j / |N_i|`, renormalized to sum 1.
    ///
    /// Every non-isolated node ends up with the same score under this form.
    Literal,
}

/// How the clustering-coefficient numerator is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringVariant {
    /// Links among the neighbors of `i`, each counted once.
    #[default]
    NeighborLinks,
    /// Sum of `A_ij` over unordered neighbor pairs `{j, k}`; this is `1` for
    /// every node with at least two neighbors.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// PageRank damping factor, `0 < alpha < 1`.
    pub alpha: f64,
    /// Convergence tolerance on the max-norm change between iterates.
    pub tol: f64,
    pub max_iter: usize,
    pub pagerank_variant: PageRankVariant,
    pub clustering_variant: ClusteringVariant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            tol: 1e-10,
            max_iter: 1000,
            pagerank_variant: PageRankVariant::Standard,
            clustering_variant: ClusteringVariant::NeighborLinks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CentralityError {
    #[error("centrality undefined on empty adjacency")]
    EmptyAdjacency,
    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("invalid solver config: {0}")]
    InvalidConfig(&'static str),
    #[error("start vector must have one positive entry per node")]
    BadStartVector,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), CentralityError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CentralityError::InvalidConfig("alpha must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(CentralityError::InvalidConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CentralityError::InvalidConfig("max_iter must be positive"));
        }
        Ok(())
    }
}

/// `d_i = Σ_{j∈N_i} r_ij`.
pub fn degree(net: &ProductNetwork) -> Vec<u64> {
    (0..net.node_count())
        .map(|i| net.weights(i).iter().map(|&w| u64::from(w)).sum())
        .collect()
}

/// Dominant eigenvector of `A` with unit Euclidean norm, and its eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCentrality {
    pub scores: Vec<f64>,
    pub lambda1: f64,
    pub iterations: usize,
}

/// Eigenvector centrality by power iteration from the uniform start vector.
pub fn eigenvector_centrality(
    net: &ProductNetwork,
    cfg: &SolverConfig,
) -> Result<EigenCentrality, CentralityError> {
    let start = vec![1.0; net.node_count()];
    eigenvector_centrality_from(net, cfg, &start)
}

/// Eigenvector centrality by power iteration from a caller-supplied positive
/// start vector.
///
/// Iterates with `A + I`, which has the eigenvectors of `A` but a strictly
/// dominant top eigenvalue even on bipartite graphs, where plain iteration on
/// `A` oscillates. Isolated products get `0`.
pub fn eigenvector_centrality_from(
    net: &ProductNetwork,
    cfg: &SolverConfig,
    start: &[f64],
) -> Result<EigenCentrality, CentralityError> {
    cfg.validate()?;
    let n = net.node_count();
    if net.edge_count() == 0 {
        return Err(CentralityError::EmptyAdjacency);
    }
    if start.len() != n || start.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(CentralityError::BadStartVector);
    }
    let active: Vec<bool> = (0..n).map(|i| net.neighbor_count(i) > 0).collect();
    let mut x: Vec<f64> = start
        .iter()
        .zip(&active)
        .map(|(&s, &a)| if a { s } else { 0.0 })
        .collect();
    normalize_l2(&mut x);
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        for i in 0..n {
            next[i] = x[i] + net.neighbors(i).iter().map(|&j| x[j as usize]).sum::<f64>();
        }
        normalize_l2(&mut next);
        residual = max_abs_diff(&x, &next);
        core::mem::swap(&mut x, &mut next);
        if residual < cfg.tol {
            let lambda1 = rayleigh_quotient(net, &x);
            return Ok(EigenCentrality {
                scores: x,
                lambda1,
                iterations: it,
            });
        }
    }
    Err(CentralityError::NotConverged {
        solver: "eigenvector centrality",
        iterations: cfg.max_iter,
        residual,
    })
}

fn normalize_l2(x: &mut [f64]) {
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, f64::max)
}

fn rayleigh_quotient(net: &ProductNetwork, x: &[f64]) -> f64 {
    let mut num = 0.0;
    for i in 0..net.node_count() {
        num += x[i] * net.neighbors(i).iter().map(|&j| x[j as usize]).sum::<f64>();
    }
    num / x.iter().map(|v| v * v).sum::<f64>()
}

/// PageRank fixed point of the configured variant, summing to 1.
pub fn pagerank(net: &ProductNetwork, cfg: &SolverConfig) -> Result<Vec<f64>, CentralityError> {
    cfg.validate()?;
    let n = net.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let alpha = cfg.alpha;
    let teleport = (1.0 - alpha) / nf;
    let inv_deg: Vec<f64> = (0..n)
        .map(|i| match net.neighbor_count(i) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();
    let mut p = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        match cfg.pagerank_variant {
            PageRankVariant::Standard => {
                let dangling: f64 = (0..n)
                    .filter(|&i| inv_deg[i] == 0.0)
                    .map(|i| p[i])
                    .sum();
                let base = teleport + alpha * dangling / nf;
                for i in 0..n {
                    let s: f64 = net
                        .neighbors(i)
                        .iter()
                        .map(|&j| p[j as usize] * inv_deg[j as usize])
                        .sum();
                    next[i] = base + alpha * s;
                }
            }
            PageRankVariant::Literal => {
                for i in 0..n {
                    let s: f64 = net.neighbors(i).iter().map(|&j| p[j as usize]).sum();
                    next[i] = teleport + alpha * s * inv_deg[i];
                }
            }
        }
        residual = max_abs_diff(&p, &next);
        core::mem::swap(&mut p, &mut next);
        if residual < cfg.tol {
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            return Ok(p);
        }
    }
    Err(CentralityError::NotConverged {
        solver: "pagerank",
        iterations: cfg.max_iter,
        residual,
    })
}

/// Number of adjacent pairs among the neighbors of every node.
pub fn neighbor_links(net: &ProductNetwork) -> Vec<u64> {
    let n = net.node_count();
    let mut stamp = vec![usize::MAX; n];
    let mut links = vec![0u64; n];
    for i in 0..n {
        let ni = net.neighbors(i);
        if ni.len() < 2 {
            continue;
        }
        for &j in ni {
            stamp[j as usize] = i;
        }
        let mut count = 0u64;
        for &j in ni {
            for &k in net.neighbors(j as usize) {
                if k > j && stamp[k as usize] == i {
                    count += 1;
                }
            }
        }
        links[i] = count;
    }
    links
}

/// Local clustering coefficient; `0` when `|N_i| < 2`.
pub fn clustering_coefficient(net: &ProductNetwork, cfg: &SolverConfig) -> Vec<f64> {
    let pairs = |i: usize| {
        let d = net.neighbor_count(i) as f64;
        d * (d - 1.0) / 2.0
    };
    match cfg.clustering_variant {
        ClusteringVariant::NeighborLinks => neighbor_links(net)
            .into_iter()
            .enumerate()
            .map(|(i, l)| if l == 0 { 0.0 } else { l as f64 / pairs(i) })
            .collect(),
        ClusteringVariant::Literal => (0..net.node_count())
            .map(|i| if net.neighbor_count(i) < 2 { 0.0 } else { 1.0 })
            .collect(),
    }
}

/// The four network features of one product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFeatureRow {
    pub product_id: alloc::string::String,
    pub degree: u64,
    pub clustering_coef: f64,
    pub eigenvector_cent: f64,
    pub pagerank: f64,
}

/// All network features, in product order, plus `λ₁`.
pub fn network_features(
    net: &ProductNetwork,
    cfg: &SolverConfig,
) -> Result<(Vec<NetworkFeatureRow>, f64), CentralityError> {
    let d = degree(net);
    let e = eigenvector_centrality(net, cfg)?;
    let p = pagerank(net, cfg)?;
    let c = clustering_coefficient(net, cfg);
    let rows = net
        .products()
        .iter()
        .enumerate()
        .map(|(i, id)| NetworkFeatureRow {
            product_id: id.clone(),
            degree: d[i],
            clustering_coef: c[i],
            eigenvector_cent: e.scores[i],
            pagerank: p[i],
        })
        .collect();
    Ok((rows, e.lambda1))
}
