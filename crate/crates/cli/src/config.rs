//! Pipeline configuration: a TOML file whose sections mirror the library
//! configs, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use coreview_core::centrality::SolverConfig;
use coreview_core::cluster::KMeansConfig;
use coreview_core::content::{SimilarityKind, TextConfig};
use coreview_core::eval::SplitConfig;
use coreview_core::features::FeatureOptions;
use coreview_core::model::ForestConfig;
use coreview_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub reviews: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSettings {
    /// Smallest shared-reviewer count exported by `build-graph`.
    pub min_weight: u32,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self { min_weight: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Any of `network`, `metadata`, `image`, `text`.
    pub groups: Vec<String>,
    pub text: TextConfig,
    pub similarity: SimilarityKind,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            groups: ["network", "metadata", "image"].map(String::from).to_vec(),
            text: TextConfig::default(),
            similarity: SimilarityKind::Cosine,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSettings {
    /// Built-in groups or `name=col1+col2` custom sets.
    pub feature_sets: Vec<String>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        Self {
            feature_sets: ["network", "top2_network", "metadata", "image", "all"].map(String::from).to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    /// Feature set the model is trained on.
    pub feature_set: String,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { feature_set: "all".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    /// Column groups the clustering runs on.
    pub groups: Vec<String>,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self { groups: ["network", "metadata"].map(String::from).to_vec() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// When set, replaces the seed of every section.
    pub seed: Option<u64>,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub graph: GraphSettings,
    pub solver: SolverConfig,
    pub features: FeatureSettings,
    pub forest: ForestConfig,
    pub split: SplitConfig,
    pub train: TrainSettings,
    pub evaluate: EvaluateSettings,
    pub kmeans: KMeansConfig,
    pub cluster: ClusterSettings,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Pushes the global seed into every section.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        self.forest.seed = seed;
        self.split.seed = seed;
        self.kmeans.seed = seed;
    }

    pub fn feature_options(&self) -> Result<FeatureOptions> {
        let mut opts = FeatureOptions {
            network: false,
            metadata: false,
            image: false,
            text: false,
            solver: self.solver,
            text_config: self.features.text,
            similarity: self.features.similarity,
        };
        for g in &self.features.groups {
            match g.as_str() {
                "network" => opts.network = true,
                "metadata" => opts.metadata = true,
                "image" => opts.image = true,
                "text" => opts.text = true,
                other => anyhow::bail!("unknown feature group {other:?} (expected network, metadata, image or text)"),
            }
        }
        if !(opts.network || opts.metadata || opts.image || opts.text) {
            anyhow::bail!("no feature groups selected");
        }
        Ok(opts)
    }
}
