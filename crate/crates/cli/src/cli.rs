//! Argument definitions. Flags override the `--config` file, which overrides
//! the built-in defaults.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use coreview_core::centrality::{ClusteringVariant, PageRankVariant};
use coreview_core::cluster::Init;
use coreview_core::content::{SimilarityKind, TfIdfMode, TopTermSelection};
use serde::de::DeserializeOwned;

use crate::commands;
use crate::config::PipelineConfig;
use crate::ingest::ReviewFormat;

/// Parses a snake_case variant name through the type's serde names.
fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "coreview", version, about = "Detect products that bought fake reviews from their co-reviewer network")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files (default: current directory).
    #[arg(short = 'o', long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for every random component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FeatureFlags {
    /// Feature groups: network, metadata, image, text.
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// PageRank damping factor.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Power-iteration tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// standard or literal.
    #[arg(long, value_parser = serde_enum::<PageRankVariant>)]
    pub pagerank_variant: Option<PageRankVariant>,
    /// neighbor_links or literal.
    #[arg(long, value_parser = serde_enum::<ClusteringVariant>)]
    pub clustering_variant: Option<ClusteringVariant>,
    /// additive or multiplicative.
    #[arg(long, value_parser = serde_enum::<TfIdfMode>)]
    pub tfidf_mode: Option<TfIdfMode>,
    /// per_product or global.
    #[arg(long, value_parser = serde_enum::<TopTermSelection>)]
    pub top_term_selection: Option<TopTermSelection>,
    #[arg(long)]
    pub top_terms: Option<usize>,
    /// cosine or angular.
    #[arg(long, value_parser = serde_enum::<SimilarityKind>)]
    pub similarity: Option<SimilarityKind>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ForestFlags {
    #[arg(long)]
    pub n_estimators: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset.
    Synth {
        #[arg(long, value_enum, default_value = "jsonl")]
        format: ReviewFormat,
        #[arg(long)]
        n_organic: Option<usize>,
        #[arg(long)]
        n_fake: Option<usize>,
        /// Share of fake-pool reviewers on fake-buyer products.
        #[arg(long)]
        fake_mix: Option<f64>,
    },
    /// Write the co-reviewer edge list.
    BuildGraph {
        #[arg(long)]
        reviews: Option<PathBuf>,
        /// Smallest shared-reviewer count to export.
        #[arg(long)]
        min_weight: Option<u32>,
    },
    /// Compute the per-product feature table.
    Features {
        #[arg(long)]
        reviews: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        flags: FeatureFlags,
    },
    /// Train a random forest on all labelled products.
    Train {
        #[arg(long)]
        features: Option<PathBuf>,
        /// Labels are read from here.
        #[arg(long)]
        reviews: Option<PathBuf>,
        /// Built-in group or `name=col1+col2`.
        #[arg(long)]
        feature_set: Option<String>,
        #[command(flatten)]
        forest: ForestFlags,
    },
    /// Compare feature sets on a shared train/test split.
    Evaluate {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        reviews: Option<PathBuf>,
        /// Comma-separated built-in groups or `name=col1+col2` sets.
        #[arg(long, value_delimiter = ',')]
        feature_sets: Option<Vec<String>>,
        #[arg(long)]
        test_fraction: Option<f64>,
        /// Keep the class ratio on both sides of the split.
        #[arg(long)]
        stratified: bool,
        #[command(flatten)]
        forest: ForestFlags,
    },
    /// Score products with a saved model.
    Predict {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// K-means over network and metadata features.
    Cluster {
        #[arg(long)]
        features: Option<PathBuf>,
        /// Adds flagged counts per cluster.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// random_partition or kmeanspp.
        #[arg(long, value_parser = serde_enum::<Init>)]
        init: Option<Init>,
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<String>>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, v: Option<PathBuf>) {
    if v.is_some() {
        *slot = v;
    }
}

fn apply_forest(cfg: &mut PipelineConfig, f: ForestFlags) {
    set(&mut cfg.forest.n_estimators, f.n_estimators);
    set(&mut cfg.forest.min_samples_leaf, f.min_samples_leaf);
    set(&mut cfg.forest.max_depth, f.max_depth);
}

/// The configuration a command runs with: defaults, then the config file,
/// then flags.
pub fn resolve(global: &Global, command: &Command) -> Result<PipelineConfig> {
    let mut cfg = match &global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    set_path(&mut cfg.paths.out_dir, global.out_dir.clone());
    match command.clone() {
        Command::Synth { n_organic, n_fake, fake_mix, .. } => {
            set(&mut cfg.synth.n_organic_products, n_organic);
            set(&mut cfg.synth.n_fake_products, n_fake);
            set(&mut cfg.synth.fake_mix, fake_mix);
        }
        Command::BuildGraph { reviews, min_weight } => {
            set_path(&mut cfg.paths.reviews, reviews);
            set(&mut cfg.graph.min_weight, min_weight);
        }
        Command::Features { reviews, embeddings, flags } => {
            set_path(&mut cfg.paths.reviews, reviews);
            set_path(&mut cfg.paths.embeddings, embeddings);
            set(&mut cfg.features.groups, flags.groups);
            set(&mut cfg.solver.alpha, flags.alpha);
            set(&mut cfg.solver.tol, flags.tol);
            set(&mut cfg.solver.max_iter, flags.max_iter);
            set(&mut cfg.solver.pagerank_variant, flags.pagerank_variant);
            set(&mut cfg.solver.clustering_variant, flags.clustering_variant);
            set(&mut cfg.features.text.mode, flags.tfidf_mode);
            set(&mut cfg.features.text.selection, flags.top_term_selection);
            set(&mut cfg.features.text.top_terms, flags.top_terms);
            set(&mut cfg.features.similarity, flags.similarity);
        }
        Command::Train { features, reviews, feature_set, forest } => {
            set_path(&mut cfg.paths.features, features);
            set_path(&mut cfg.paths.reviews, reviews);
            set(&mut cfg.train.feature_set, feature_set);
            apply_forest(&mut cfg, forest);
        }
        Command::Evaluate { features, reviews, feature_sets, test_fraction, stratified, forest } => {
            set_path(&mut cfg.paths.features, features);
            set_path(&mut cfg.paths.reviews, reviews);
            set(&mut cfg.evaluate.feature_sets, feature_sets);
            set(&mut cfg.split.test_fraction, test_fraction);
            if stratified {
                cfg.split.stratified = true;
            }
            apply_forest(&mut cfg, forest);
        }
        Command::Predict { features, model } => {
            set_path(&mut cfg.paths.features, features);
            set_path(&mut cfg.paths.model, model);
        }
        Command::Cluster { features, model, k, restarts, init, groups } => {
            set_path(&mut cfg.paths.features, features);
            set_path(&mut cfg.paths.model, model);
            set(&mut cfg.kmeans.k, k);
            set(&mut cfg.kmeans.n_restarts, restarts);
            set(&mut cfg.kmeans.init, init);
            set(&mut cfg.cluster.groups, groups);
        }
    }
    if let Some(seed) = global.seed.or(cfg.seed) {
        cfg.apply_seed(seed);
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.global, &cli.command)?;
    let written = match cli.command {
        Command::Synth { format, .. } => commands::synth(&cfg, format)?,
        Command::BuildGraph { .. } => commands::build_graph(&cfg)?,
        Command::Features { .. } => commands::features(&cfg)?,
        Command::Train { .. } => commands::train(&cfg)?,
        Command::Evaluate { .. } => {
            let (written, table) = commands::evaluate(&cfg)?;
            print!("{table}");
            written
        }
        Command::Predict { .. } => commands::predict(&cfg)?,
        Command::Cluster { .. } => commands::cluster(&cfg)?,
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
