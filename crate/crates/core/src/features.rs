//! The per-product feature table and its named column groups.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::centrality::{network_features, CentralityError, SolverConfig};
use crate::content::{image_features, metadata_features, product_text_features};
use crate::content::{ImageSimRow, SimilarityKind, TextConfig};
use crate::graph::{GraphError, ProductNetwork};
use crate::records::{EmbeddingIndex, ImageEmbedding, ProductReviewSet};

pub const NETWORK_COLUMNS: [&str; 4] = ["degree", "clustering_coef", "eigenvector_cent", "pagerank"];

pub const TOP2_NETWORK_COLUMNS: [&str; 2] = ["clustering_coef", "eigenvector_cent"];

pub const METADATA_COLUMNS: [&str; 13] = [
    "tfidf_sim",
    "n_reviews",
    "avg_rating",
    "gap_avg",
    "gap_min",
    "gap_max",
    "gap_std",
    "share_helpful",
    "share_1star",
    "share_5star",
    "share_photo",
    "stdev_review_len",
    "tfidf_sim_missing",
];

pub const IMAGE_COLUMNS: [&str; 15] = [
    "img_sim_avg",
    "img_sim_min",
    "img_sim_max",
    "img_sim_std",
    "sim_review_avg",
    "sim_review_min",
    "sim_review_max",
    "sim_review_std",
    "sim_product_avg",
    "sim_product_min",
    "sim_product_max",
    "sim_product_std",
    "img_sim_missing",
    "sim_review_missing",
    "sim_product_missing",
];

/// Names of the built-in column groups.
pub const BUILTIN_GROUPS: [&str; 6] = ["network", "top2_network", "metadata", "text", "image", "all"];

/// Column name of text feature `k` (zero-based): `tfidf_0001`, `tfidf_0002`, ...
pub fn text_column(k: usize) -> String {
    format!("tfidf_{:04}", k + 1)
}

fn is_text_column(name: &str) -> bool {
    name.strip_prefix("tfidf_")
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("network features: {0}")]
    Centrality(#[from] CentralityError),
    #[error("unknown feature column(s): {}", .0.join(", "))]
    UnknownColumns(Vec<String>),
    #[error("feature group {0:?} is empty")]
    EmptyGroup(String),
    #[error("unknown feature group {0:?}")]
    UnknownGroup(String),
    #[error("product {0} missing from feature table")]
    UnknownProduct(String),
    #[error("ragged feature table: row {row} has {got} values, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
}

/// Which feature groups to compute and how.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    pub network: bool,
    pub metadata: bool,
    pub image: bool,
    /// The wide `tfidf_NNNN` block.
    pub text: bool,
    pub solver: SolverConfig,
    pub text_config: TextConfig,
    pub similarity: SimilarityKind,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            network: true,
            metadata: true,
            image: true,
            text: false,
            solver: SolverConfig::default(),
            text_config: TextConfig::default(),
            similarity: SimilarityKind::Cosine,
        }
    }
}

/// Named per-product feature vectors, one row per product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub product_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn image_values(row: &ImageSimRow) -> [f64; 15] {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let (a, b, c) = (&row.img_sim, &row.sim_review, &row.sim_product);
    [
        a.avg, a.min, a.max, a.std, b.avg, b.min, b.max, b.std, c.avg, c.min, c.max, c.std,
        flag(a.missing),
        flag(b.missing),
        flag(c.missing),
    ]
}

impl FeatureTable {
    pub fn new(
        product_ids: Vec<String>,
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, FeatureError> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(FeatureError::Ragged {
                    row: i,
                    got: r.len(),
                    expected: columns.len(),
                });
            }
        }
        Ok(Self {
            product_ids,
            columns,
            rows,
        })
    }

    /// Computes every enabled feature group for `sets`, in product-id order.
    ///
    /// Network features use a projection of exactly these review sets.
    pub fn build(
        sets: &[ProductReviewSet],
        embeddings: &[ImageEmbedding],
        opts: &FeatureOptions,
    ) -> Result<Self, FeatureError> {
        let mut sets: Vec<&ProductReviewSet> = sets.iter().collect();
        sets.sort_by(|a, b| a.product_id.cmp(&b.product_id));
        let mut columns: Vec<String> = Vec::new();
        let mut rows: Vec<Vec<f64>> = sets.iter().map(|_| Vec::new()).collect();

        if opts.network {
            let owned: Vec<ProductReviewSet> = sets.iter().map(|s| (*s).clone()).collect();
            let net = ProductNetwork::project(&owned)?;
            let (net_rows, _) = network_features(&net, &opts.solver)?;
            columns.extend(NETWORK_COLUMNS.iter().map(|s| s.to_string()));
            for (row, s) in rows.iter_mut().zip(&sets) {
                let r = &net_rows[net.index_of(&s.product_id).expect("projected product")];
                row.extend([r.degree as f64, r.clustering_coef, r.eigenvector_cent, r.pagerank]);
            }
        }
        if opts.metadata {
            columns.extend(METADATA_COLUMNS.iter().map(|s| s.to_string()));
            for (row, s) in rows.iter_mut().zip(&sets) {
                let m = metadata_features(s, &opts.text_config);
                row.extend([
                    m.tfidf_sim,
                    m.n_reviews as f64,
                    m.avg_rating,
                    m.gap_avg,
                    m.gap_min,
                    m.gap_max,
                    m.gap_std,
                    m.share_helpful,
                    m.share_1star,
                    m.share_5star,
                    m.share_photo,
                    m.stdev_review_len,
                    if m.tfidf_sim_missing { 1.0 } else { 0.0 },
                ]);
            }
        }
        if opts.image {
            let index = EmbeddingIndex::new(embeddings);
            columns.extend(IMAGE_COLUMNS.iter().map(|s| s.to_string()));
            for (row, s) in rows.iter_mut().zip(&sets) {
                row.extend(image_values(&image_features(
                    &index,
                    &s.product_id,
                    opts.similarity,
                )));
            }
        }
        if opts.text {
            let owned: Vec<ProductReviewSet> = sets.iter().map(|s| (*s).clone()).collect();
            let text = product_text_features(&owned, &opts.text_config);
            columns.extend((0..opts.text_config.top_terms).map(text_column));
            for (row, t) in rows.iter_mut().zip(text.rows) {
                row.extend(t);
            }
        }
        Self::new(
            sets.iter().map(|s| s.product_id.clone()).collect(),
            columns,
            rows,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row_index(&self, product_id: &str) -> Option<usize> {
        self.product_ids.iter().position(|p| p == product_id)
    }

    /// Columns of a built-in group that are present in this table.
    pub fn group_columns(&self, group: &str) -> Result<Vec<String>, FeatureError> {
        let present = |names: &[&str]| -> Vec<String> {
            names
                .iter()
                .filter(|n| self.column_index(n).is_some())
                .map(|n| n.to_string())
                .collect()
        };
        let cols = match group {
            "network" => present(&NETWORK_COLUMNS),
            "top2_network" => present(&TOP2_NETWORK_COLUMNS),
            "metadata" => present(&METADATA_COLUMNS),
            "image" => present(&IMAGE_COLUMNS),
            "text" => self
                .columns
                .iter()
                .filter(|c| is_text_column(c))
                .cloned()
                .collect(),
            "all" => self.columns.clone(),
            other => return Err(FeatureError::UnknownGroup(other.to_string())),
        };
        if cols.is_empty() {
            return Err(FeatureError::EmptyGroup(group.to_string()));
        }
        Ok(cols)
    }

    /// Sub-table restricted to `columns`, in the given order.
    pub fn select(&self, columns: &[String]) -> Result<FeatureTable, FeatureError> {
        let idx = self.indices(columns)?;
        Ok(FeatureTable {
            product_ids: self.product_ids.clone(),
            columns: columns.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&k| r[k]).collect())
                .collect(),
        })
    }

    /// Sub-table restricted to the given products, in the given order.
    pub fn select_rows(&self, product_ids: &[String]) -> Result<FeatureTable, FeatureError> {
        let rows = product_ids
            .iter()
            .map(|p| {
                self.row_index(p)
                    .map(|i| self.rows[i].clone())
                    .ok_or_else(|| FeatureError::UnknownProduct(p.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(FeatureTable {
            product_ids: product_ids.to_vec(),
            columns: self.columns.clone(),
            rows,
        })
    }

    fn indices(&self, columns: &[String]) -> Result<Vec<usize>, FeatureError> {
        let missing: Vec<String> = columns
            .iter()
            .filter(|c| self.column_index(c).is_none())
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(FeatureError::UnknownColumns(missing));
        }
        Ok(columns
            .iter()
            .map(|c| self.column_index(c).expect("checked"))
            .collect())
    }
}
