//! On-disk formats of pipeline artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coreview_core::cluster::ClusterReport;
use coreview_core::eval::{RocPoint, SetResult};
use coreview_core::features::FeatureTable;
use coreview_core::graph::EdgeRow;
use coreview_core::model::{ForestModel, FORMAT_VERSION};
use sha2::{Digest, Sha256};

pub const MODEL_MAGIC: &str = "coreview-forest";

/// Files written by one command. Unless [`Outputs::commit`] is called, the
/// files are deleted on drop, so a failed run leaves nothing behind.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), committed: false })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` inside the output directory through a temporary file
    /// and a rename.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let result = (|| -> Result<()> {
            let file = fs::File::create(&tmp)?;
            let mut w = std::io::BufWriter::new(file);
            fill(&mut w)?;
            w.flush()?;
            drop(w);
            fs::rename(&tmp, &path)?;
            Ok(())
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_feature_table(out: &mut dyn Write, table: &FeatureTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("product_id").chain(table.columns.iter().map(String::as_str)))?;
    for (id, row) in table.product_ids.iter().zip(&table.rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("product_id") {
        bail!("{}: first column must be product_id", path.display());
    }
    let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let (mut ids, mut rows) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        ids.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .zip(&columns)
            .map(|(v, c)| {
                v.parse::<f64>()
                    .with_context(|| format!("{}: line {line}: column `{c}`: {v:?} is not a number", path.display()))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(FeatureTable::new(ids, columns, rows)?)
}

pub fn write_edges(out: &mut dyn Write, edges: &[EdgeRow<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_i", "product_j", "weight"])?;
    for e in edges {
        w.write_record([e.product_a, e.product_b, &e.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a coreview model file")]
    BadHeader,
    #[error("model format version {found} is not supported (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model file is corrupted or truncated (checksum mismatch)")]
    Checksum,
    #[error("model body is invalid: {0}")]
    Body(String),
}

/// `coreview-forest v<version> sha256=<hex of body>` followed by the JSON body.
pub fn model_to_bytes(model: &ForestModel) -> Result<Vec<u8>> {
    let body = serde_json::to_vec(model)?;
    let mut out = format!("{MODEL_MAGIC} v{} sha256={}\n", model.format_version, sha256_hex(&body)).into_bytes();
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<ForestModel, ModelFileError> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or(ModelFileError::BadHeader)?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| ModelFileError::BadHeader)?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MODEL_MAGIC) {
        return Err(ModelFileError::BadHeader);
    }
    let found: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or(ModelFileError::BadHeader)?;
    if found != FORMAT_VERSION {
        return Err(ModelFileError::Version { found, expected: FORMAT_VERSION });
    }
    let digest = parts.next().and_then(|v| v.strip_prefix("sha256=")).ok_or(ModelFileError::BadHeader)?;
    let body = &bytes[nl + 1..];
    if sha256_hex(body) != digest {
        return Err(ModelFileError::Checksum);
    }
    let model: ForestModel = serde_json::from_slice(body).map_err(|e| ModelFileError::Body(e.to_string()))?;
    if model.format_version != FORMAT_VERSION {
        return Err(ModelFileError::Version { found: model.format_version, expected: FORMAT_VERSION });
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<ForestModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    model_from_bytes(&bytes).with_context(|| format!("loading model {}", path.display()))
}

pub fn write_importances(out: &mut dyn Write, ranked: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "importance"])?;
    for (name, v) in ranked {
        w.write_record([name.as_str(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions(out: &mut dyn Write, ids: &[String], scores: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_id", "score", "label"])?;
    for (id, s) in ids.iter().zip(scores) {
        w.write_record([id.as_str(), &s.to_string(), if *s >= 0.5 { "1" } else { "0" }])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_roc(out: &mut dyn Write, roc: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "fpr", "tpr"])?;
    for p in roc {
        w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Table of the five measures per feature set.
pub fn metrics_table(results: &[SetResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0).max(11);
    let mut s = format!(
        "{:<width$}  {:>6}  {:>8}  {:>6}  {:>6}  {:>6}\n",
        "feature_set", "auc", "accuracy", "tnr", "tpr", "f1"
    );
    for r in results {
        let m = &r.report;
        s.push_str(&format!(
            "{:<width$}  {:>6.3}  {:>8.3}  {:>6.3}  {:>6.3}  {:>6.3}\n",
            r.name, m.auc, m.accuracy, m.tnr, m.tpr, m.f1
        ));
    }
    s
}

/// One block per feature set with the measures and confusion counts.
pub fn metrics_report(results: &[SetResult]) -> String {
    let mut s = String::new();
    for r in results {
        let m = &r.report;
        s.push_str(&format!("[{}]\n", r.name));
        for (k, v) in [
            ("auc", m.auc),
            ("accuracy", m.accuracy),
            ("tnr", m.tnr),
            ("tpr", m.tpr),
            ("f1", m.f1),
            ("precision", m.precision),
            ("threshold", m.threshold),
        ] {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str(&format!("tp = {}\nfp = {}\ntn = {}\nfn = {}\n", m.tp, m.fp, m.tn, m.r#fn));
        let top: Vec<String> = r.importances.iter().take(5).map(|(n, w)| format!("{n} ({w:.3})")).collect();
        s.push_str(&format!("top_features = {}\n\n", top.join(", ")));
    }
    s
}

pub fn write_assignments(out: &mut dyn Write, ids: &[String], report: &ClusterReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_id", "cluster"])?;
    for (id, c) in ids.iter().zip(&report.assignments) {
        w.write_record([id.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cluster: size, flagged count and shares when a model was
/// used, then the mean of every profiled column.
pub fn write_profile(out: &mut dyn Write, columns: &[String], report: &ClusterReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cluster".to_string(), "size".to_string()];
    if report.flagged.is_some() {
        header.extend(["flagged_count", "flagged_share", "share_of_flagged"].map(String::from));
    }
    header.extend(columns.iter().map(|c| format!("mean_{c}")));
    w.write_record(&header)?;
    let means = report.feature_means.as_ref();
    for k in 0..report.sizes.len() {
        let mut rec = vec![k.to_string(), report.sizes[k].to_string()];
        if let Some(f) = &report.flagged {
            rec.extend([f.count[k].to_string(), f.share[k].to_string(), f.share_of_flagged[k].to_string()]);
        }
        if let Some(m) = means {
            rec.extend(m[k].iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
