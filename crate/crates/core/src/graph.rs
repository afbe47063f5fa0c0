//! Co-reviewer projection: products are nodes, and two products are joined by
//! an edge weighted with the number of distinct reviewers they share.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::records::ProductReviewSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("no products to project")]
    Empty,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(usize, usize),
}

/// Weighted undirected product graph in compressed sparse row form.
///
/// Products are kept in ascending id order; node `i` is `products()[i]`.
/// Every edge is stored in both directions, neighbor lists are sorted, and
/// there are no self-loops. The binary adjacency `A` used by the centralities
/// is the sparsity pattern (`A[i][j] = 1` iff `r_ij >= 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductNetwork {
    products: Vec<String>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<u32>,
}

/// One row of an exported edge list, `product_a < product_b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRow<'a> {
    pub product_a: &'a str,
    pub product_b: &'a str,
    pub weight: u32,
}

impl ProductNetwork {
    /// Projects review sets onto the product graph.
    ///
    /// `r_ij` counts distinct reviewers of both `i` and `j`; a reviewer who
    /// reviewed a product twice still counts once. Products without shared
    /// reviewers stay in the graph as isolated nodes.
    pub fn project(sets: &[ProductReviewSet]) -> Result<Self, GraphError> {
        if sets.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut ids: Vec<&str> = sets.iter().map(|s| s.product_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: BTreeMap<&str, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();

        // distinct (reviewer, product) incidences, grouped by reviewer
        let mut incidences: Vec<(&str, u32)> = sets
            .iter()
            .flat_map(|s| {
                let p = index[s.product_id.as_str()];
                s.reviews.iter().map(move |r| (r.reviewer_id.as_str(), p))
            })
            .collect();
        incidences.sort_unstable();
        incidences.dedup();

        let n = ids.len();
        // reviewer -> products (CSR over reviewer runs)
        let mut reviewer_offsets = vec![0usize];
        let mut reviewer_products = Vec::with_capacity(incidences.len());
        for (k, &(reviewer, product)) in incidences.iter().enumerate() {
            if k > 0 && incidences[k - 1].0 != reviewer {
                reviewer_offsets.push(reviewer_products.len());
            }
            reviewer_products.push(product);
        }
        reviewer_offsets.push(reviewer_products.len());
        let n_reviewers = reviewer_offsets.len() - 1;

        // product -> reviewers
        let mut product_count = vec![0usize; n + 1];
        for &p in &reviewer_products {
            product_count[p as usize + 1] += 1;
        }
        for i in 0..n {
            product_count[i + 1] += product_count[i];
        }
        let mut fill = product_count.clone();
        let mut product_reviewers = vec![0u32; reviewer_products.len()];
        for r in 0..n_reviewers {
            for &p in &reviewer_products[reviewer_offsets[r]..reviewer_offsets[r + 1]] {
                product_reviewers[fill[p as usize]] = r as u32;
                fill[p as usize] += 1;
            }
        }

        // sparse accumulator per product
        let mut counts = vec![0u32; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for &r in &product_reviewers[product_count[i]..product_count[i + 1]] {
                let r = r as usize;
                for &j in &reviewer_products[reviewer_offsets[r]..reviewer_offsets[r + 1]] {
                    if j as usize == i {
                        continue;
                    }
                    if counts[j as usize] == 0 {
                        touched.push(j);
                    }
                    counts[j as usize] += 1;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                neighbors.push(j);
                weights.push(counts[j as usize]);
                counts[j as usize] = 0;
            }
            touched.clear();
            offsets.push(neighbors.len());
        }

        Ok(Self {
            products: ids.into_iter().map(String::from).collect(),
            offsets,
            neighbors,
            weights,
        })
    }

    /// Builds a network from explicit weighted edges between node indices.
    /// Duplicate edges (in either orientation) have their weights summed.
    pub fn from_edges(
        products: Vec<String>,
        edges: &[(usize, usize, u32)],
    ) -> Result<Self, GraphError> {
        let n = products.len();
        let mut adj: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(GraphError::NodeOutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a, b));
            }
            if w == 0 {
                return Err(GraphError::ZeroWeight(a, b));
            }
            *adj[a].entry(b as u32).or_default() += w;
            *adj[b].entry(a as u32).or_default() += w;
        }
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for row in adj {
            for (j, w) in row {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(Self {
            products,
            offsets,
            neighbors,
            weights,
        })
    }

    /// Number of products `n = |V|`.
    pub fn node_count(&self) -> usize {
        self.products.len()
    }

    /// Number of undirected edges `|E|`.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn index_of(&self, product_id: &str) -> Option<usize> {
        self.products
            .binary_search_by(|p| p.as_str().cmp(product_id))
            .ok()
    }

    /// Sorted neighbor list `N_i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Shared-reviewer counts aligned with [`neighbors`](Self::neighbors).
    pub fn weights(&self, i: usize) -> &[u32] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `|N_i|`.
    pub fn neighbor_count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// `r_ij`, zero when there is no edge.
    pub fn weight(&self, i: usize, j: usize) -> u32 {
        match self.neighbors(i).binary_search(&(j as u32)) {
            Ok(k) => self.weights(i)[k],
            Err(_) => 0,
        }
    }

    /// Edges with `r_ij >= min_weight`, each unordered pair once, sorted by
    /// `(product_a, product_b)`.
    pub fn export_edges(&self, min_weight: u32) -> Vec<EdgeRow<'_>> {
        let mut rows = Vec::new();
        for i in 0..self.node_count() {
            for (&j, &w) in self.neighbors(i).iter().zip(self.weights(i)) {
                if (j as usize) > i && w >= min_weight {
                    rows.push(EdgeRow {
                        product_a: &self.products[i],
                        product_b: &self.products[j as usize],
                        weight: w,
                    });
                }
            }
        }
        rows
    }
}
