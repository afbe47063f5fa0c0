use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Criterion, DecisionTree, TreeParams};
use super::{check_training_data, ModelError};
use crate::eval::Standardizer;
use crate::features::FeatureTable;
use crate::rng::stream;

/// Version of the serialized [`ForestModel`] layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(p))` features per node.
    #[default]
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => libm::ceil(libm::sqrt(p as f64)) as usize,
            MaxFeatures::All => p,
            MaxFeatures::Fixed(k) => k,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub criterion: Criterion,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            min_samples_leaf: 4,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            max_depth: 20,
            bootstrap: true,
            criterion: Criterion::Gini,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m| Err(ModelError::InvalidConfig(m));
        if self.n_estimators < 1 {
            return bad("n_estimators must be at least 1");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if self.max_features == MaxFeatures::Fixed(0) {
            return bad("max_features must be at least 1");
        }
        Ok(())
    }
}

/// A trained random forest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub config: ForestConfig,
    /// Mean decrease in impurity per feature, summing to 1 (all zero when no
    /// tree ever split).
    pub importances: Vec<f64>,
    pub trees: Vec<DecisionTree>,
    /// Scaling applied to raw feature values before the trees see them.
    #[serde(default)]
    pub standardizer: Option<Standardizer>,
}

/// Trains a forest on rows `x` with binary labels `y` (1 = fake buyer).
///
/// Tree `t` draws its bootstrap sample and feature subsets from its own
/// stream of `cfg.seed`, so the result is independent of training order.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: Vec<String>,
    cfg: &ForestConfig,
) -> Result<ForestModel, ModelError> {
    cfg.validate()?;
    check_training_data(x, y, &feature_names)?;
    let n = x.len();
    let p = feature_names.len();
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        min_samples_leaf: cfg.min_samples_leaf,
        mtry: cfg.max_features.resolve(p),
        criterion: cfg.criterion,
    };
    let grow = |t: usize| {
        let mut rng = stream(cfg.seed, t as u64);
        let rows: Vec<usize> = if cfg.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        grow_tree(x, y, rows, params, &mut rng)
    };
    #[cfg(feature = "parallel")]
    let grown: Vec<(DecisionTree, Vec<f64>)> = {
        use rayon::prelude::*;
        (0..cfg.n_estimators).into_par_iter().map(grow).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let grown: Vec<(DecisionTree, Vec<f64>)> = (0..cfg.n_estimators).map(grow).collect();

    // merged in tree order so the sums do not depend on scheduling
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    let mut importances = vec![0.0; p];
    for (tree, imp) in grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            importances
                .iter_mut()
                .zip(&imp)
                .for_each(|(a, b)| *a += b / total);
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel {
        format_version: FORMAT_VERSION,
        feature_names,
        config: *cfg,
        importances,
        trees,
        standardizer: None,
    })
}

/// Fits a standardizer on the given rows of `table` restricted to `columns`,
/// then trains a forest on the standardized rows. The model carries the
/// standardizer so it can score raw feature tables.
pub fn train_on_table(
    table: &FeatureTable,
    rows: &[usize],
    labels: &[u8],
    columns: &[String],
    cfg: &ForestConfig,
) -> Result<ForestModel, ModelError> {
    let sub = table.select(columns).map_err(ModelError::from)?;
    let raw: Vec<Vec<f64>> = rows.iter().map(|&i| sub.rows[i].clone()).collect();
    let std = Standardizer::fit(&raw);
    let mut model = train_forest(&std.apply(&raw), labels, columns.to_vec(), cfg)?;
    model.standardizer = Some(std);
    Ok(model)
}

impl ForestModel {
    fn check_columns(&self, x: &[Vec<f64>]) -> Result<(), ModelError> {
        let p = self.feature_names.len();
        match x.iter().find(|r| r.len() != p) {
            Some(r) => Err(ModelError::ColumnMismatch {
                expected: p,
                got: r.len(),
            }),
            None => Ok(()),
        }
    }

    /// Fraction of trees voting class 1, per row.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        self.check_columns(x)?;
        let k = self.trees.len() as f64;
        Ok(x.iter()
            .map(|row| {
                let votes = self.trees.iter().filter(|t| t.predict(row) == 1).count();
                votes as f64 / k
            })
            .collect())
    }

    /// Hard labels: score `>= 0.5`.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<u8>, ModelError> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|s| u8::from(s >= 0.5))
            .collect())
    }

    /// Scores every row of a raw feature table: selects the model's columns
    /// by name and applies the stored standardizer.
    pub fn score_table(&self, table: &FeatureTable) -> Result<Vec<f64>, ModelError> {
        let sub = table.select(&self.feature_names)?;
        match &self.standardizer {
            Some(s) => self.predict_proba(&s.apply(&sub.rows)),
            None => self.predict_proba(&sub.rows),
        }
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<u8>, ModelError> {
        Ok(self
            .score_table(table)?
            .into_iter()
            .map(|s| u8::from(s >= 0.5))
            .collect())
    }

    /// `(feature name, importance)` sorted by descending importance, ties by
    /// column order.
    pub fn feature_importances(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(usize, f64)> = self.importances.iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter()
            .map(|(i, w)| (self.feature_names[i].clone(), w))
            .collect()
    }
}
