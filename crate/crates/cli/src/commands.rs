//! Subcommand implementations. Each takes a resolved [`PipelineConfig`] and
//! returns the files it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use coreview_core::cluster::{kmeans, profile_clusters};
use coreview_core::eval::{compare_feature_sets, FeatureSet, Standardizer};
use coreview_core::features::FeatureTable;
use coreview_core::graph::ProductNetwork;
use coreview_core::model::train_on_table;
use coreview_core::records::{flatten, ProductReviewSet};
use coreview_core::synth::generate;

use crate::config::PipelineConfig;
use crate::formats::{self, Outputs};
use crate::ingest::{self, ReviewFormat};
use crate::manifest::write_manifest;

pub const REVIEWS_FILE: &str = "reviews";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const EDGES_FILE: &str = "edges.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const MODEL_FILE: &str = "forest.model";
pub const IMPORTANCES_FILE: &str = "importances.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const METRICS_JSON_FILE: &str = "metrics.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const CLUSTERS_JSON_FILE: &str = "clusters.json";

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("missing --{what} path"))
}

fn load_reviews(path: &Path) -> Result<Vec<ProductReviewSet>> {
    let format = ReviewFormat::from_path(path)?;
    ingest::load_reviews(path, format).context("ingest")
}

/// Writes a synthetic dataset: reviews, embeddings and a manifest. The
/// config is validated before anything is written.
pub fn synth(cfg: &PipelineConfig, format: ReviewFormat) -> Result<Vec<PathBuf>> {
    cfg.synth.validate().context("synth")?;
    let (sets, embeddings) = generate(&cfg.synth).context("synth")?;
    let mut out = Outputs::new(&out_dir(cfg))?;
    let ext = match format {
        ReviewFormat::Csv => "csv",
        ReviewFormat::Jsonl => "jsonl",
    };
    let records = flatten(&sets);
    out.write(&format!("{REVIEWS_FILE}.{ext}"), |w| Ok(ingest::write_reviews(w, format, &records)?))?;
    out.write(EMBEDDINGS_FILE, |w| Ok(ingest::write_embeddings(w, &embeddings)?))?;
    write_manifest(&mut out, "synth", cfg, &[])?;
    Ok(out.commit())
}

/// Projects reviews onto the product network and writes its edge list.
pub fn build_graph(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    if cfg.graph.min_weight == 0 {
        bail!("graph: --min-weight must be at least 1");
    }
    let reviews = required(&cfg.paths.reviews, "reviews")?;
    let sets = load_reviews(reviews)?;
    let net = ProductNetwork::project(&sets).context("graph")?;
    let edges = net.export_edges(cfg.graph.min_weight);
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(EDGES_FILE, |w| formats::write_edges(w, &edges))?;
    write_manifest(&mut out, "build-graph", cfg, &[reviews])?;
    Ok(out.commit())
}

/// Builds the feature table the other commands read.
pub fn build_table(cfg: &PipelineConfig) -> Result<FeatureTable> {
    let opts = cfg.feature_options().context("features")?;
    let sets = load_reviews(required(&cfg.paths.reviews, "reviews")?)?;
    let embeddings = match &cfg.paths.embeddings {
        Some(p) => ingest::load_embeddings(p).context("ingest")?,
        None if opts.image => bail!("features: the image group needs --embeddings"),
        None => Vec::new(),
    };
    FeatureTable::build(&sets, &embeddings, &opts).context("features")
}

pub fn features(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let table = build_table(cfg)?;
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(FEATURES_FILE, |w| formats::write_feature_table(w, &table))?;
    let mut inputs = vec![required(&cfg.paths.reviews, "reviews")?];
    inputs.extend(cfg.paths.embeddings.as_deref());
    write_manifest(&mut out, "features", cfg, &inputs)?;
    Ok(out.commit())
}

/// Class labels (1 = fake buyer) of the table's products, from the reviews.
pub fn labels_for(table: &FeatureTable, sets: &[ProductReviewSet]) -> Result<Vec<u8>> {
    let by_id: BTreeMap<&str, _> = sets.iter().map(|s| (s.product_id.as_str(), s.label)).collect();
    table
        .product_ids
        .iter()
        .map(|id| match by_id.get(id.as_str()) {
            Some(Some(l)) => Ok(l.as_class()),
            Some(None) => bail!("product {id} has no label in the reviews file"),
            None => bail!("product {id} does not appear in the reviews file"),
        })
        .collect()
}

/// Parses `name` (a built-in group) or `name=col1+col2` (custom columns).
pub fn parse_feature_sets(table: &FeatureTable, specs: &[String]) -> Result<Vec<FeatureSet>> {
    specs
        .iter()
        .map(|spec| {
            let spec = spec.trim();
            let name = spec.split_once('=').map_or(spec, |(n, _)| n).trim();
            // the name ends up in output file names
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                bail!("feature set name {name:?} must be non-empty and use only letters, digits, `_` or `-`");
            }
            Ok(match spec.split_once('=') {
                Some((name, cols)) => FeatureSet {
                    name: name.trim().to_string(),
                    columns: cols.split('+').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect(),
                },
                None => FeatureSet { name: spec.to_string(), columns: table.group_columns(spec)? },
            })
        })
        .collect()
}

fn table_and_labels(cfg: &PipelineConfig) -> Result<(FeatureTable, Vec<u8>, Vec<&Path>)> {
    let features = required(&cfg.paths.features, "features")?;
    let reviews = required(&cfg.paths.reviews, "reviews")?;
    let table = formats::read_feature_table(features)?;
    let labels = labels_for(&table, &load_reviews(reviews)?)?;
    Ok((table, labels, vec![features, reviews]))
}

/// Trains a forest on every labelled product and saves it.
pub fn train(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let (table, labels, inputs) = table_and_labels(cfg)?;
    let set = parse_feature_sets(&table, std::slice::from_ref(&cfg.train.feature_set))?
        .pop()
        .expect("one set");
    let rows: Vec<usize> = (0..table.n_rows()).collect();
    let model = train_on_table(&table, &rows, &labels, &set.columns, &cfg.forest).context("model")?;
    let bytes = formats::model_to_bytes(&model)?;
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(MODEL_FILE, |w| Ok(w.write_all(&bytes)?))?;
    out.write(IMPORTANCES_FILE, |w| formats::write_importances(w, &model.feature_importances()))?;
    write_manifest(&mut out, "train", cfg, &inputs)?;
    Ok(out.commit())
}

/// The feature-set comparison: one shared split, a forest per set.
pub fn evaluate(cfg: &PipelineConfig) -> Result<(Vec<PathBuf>, String)> {
    let (table, labels, inputs) = table_and_labels(cfg)?;
    let sets = parse_feature_sets(&table, &cfg.evaluate.feature_sets)?;
    let results = compare_feature_sets(&table, &labels, &sets, &cfg.forest, &cfg.split).context("eval")?;
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(METRICS_FILE, |w| Ok(w.write_all(formats::metrics_report(&results).as_bytes())?))?;
    out.write(METRICS_JSON_FILE, |w| {
        serde_json::to_writer_pretty(&mut *w, &results)?;
        Ok(w.write_all(b"\n")?)
    })?;
    for r in &results {
        out.write(&format!("roc_{}.csv", r.name), |w| formats::write_roc(w, &r.report.roc))?;
        out.write(&format!("importances_{}.csv", r.name), |w| formats::write_importances(w, &r.importances))?;
    }
    write_manifest(&mut out, "evaluate", cfg, &inputs)?;
    Ok((out.commit(), formats::metrics_table(&results)))
}

pub fn predict(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let features = required(&cfg.paths.features, "features")?;
    let model_path = required(&cfg.paths.model, "model")?;
    let table = formats::read_feature_table(features)?;
    let model = formats::load_model(model_path)?;
    let scores = model.score_table(&table).context("model")?;
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(PREDICTIONS_FILE, |w| formats::write_predictions(w, &table.product_ids, &scores))?;
    write_manifest(&mut out, "predict", cfg, &[features, model_path])?;
    Ok(out.commit())
}

/// K-means on the standardized cluster columns, profiled over the same
/// columns; with a model, also the flagged counts per cluster.
pub fn cluster(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let features = required(&cfg.paths.features, "features")?;
    let table = formats::read_feature_table(features)?;
    let mut columns = Vec::new();
    for g in &cfg.cluster.groups {
        columns.extend(table.group_columns(g).context("cluster")?);
    }
    let sub = table.select(&columns).context("cluster")?;
    let x = Standardizer::fit(&sub.rows).apply(&sub.rows);
    let report = kmeans(&x, &cfg.kmeans).context("cluster")?;
    let model = cfg.paths.model.as_deref().map(formats::load_model).transpose()?;
    let mut report = profile_clusters(report, &table, model.as_ref()).context("cluster")?;
    // keep the profile to the clustered columns
    if let Some(means) = report.feature_means.as_mut() {
        let idx: Vec<usize> = columns.iter().map(|c| table.column_index(c).expect("selected")).collect();
        for m in means.iter_mut() {
            *m = idx.iter().map(|&i| m[i]).collect();
        }
    }
    let mut out = Outputs::new(&out_dir(cfg))?;
    out.write(ASSIGNMENTS_FILE, |w| formats::write_assignments(w, &table.product_ids, &report))?;
    out.write(PROFILE_FILE, |w| formats::write_profile(w, &columns, &report))?;
    out.write(CLUSTERS_JSON_FILE, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        Ok(w.write_all(b"\n")?)
    })?;
    let mut inputs = vec![features];
    inputs.extend(cfg.paths.model.as_deref());
    write_manifest(&mut out, "cluster", cfg, &inputs)?;
    Ok(out.commit())
}
