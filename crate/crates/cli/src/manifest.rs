//! Run manifests: the resolved configuration plus digests of every input and
//! output file, enough to repeat a run exactly.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::formats::{sha256_hex, Outputs};

/// `manifest-<command>.json`, so commands sharing an output directory keep
/// their own records.
pub fn manifest_name(command: &str) -> String {
    format!("manifest-{command}.json")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn digest(path: &Path, shown: String) -> Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest { path: shown, sha256: sha256_hex(&bytes) })
}

/// Writes the command's manifest next to its outputs. Input paths are recorded as
/// given, outputs relative to the output directory.
pub fn write_manifest(out: &mut Outputs, command: &str, config: &PipelineConfig, inputs: &[&Path]) -> Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| digest(p, p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = Vec::new();
    for p in out.files() {
        let name = p.strip_prefix(out.dir()).unwrap_or(p).display().to_string();
        outputs.push(digest(p, name)?);
    }
    let manifest = Manifest {
        tool: "coreview".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: config.clone(),
        inputs,
        outputs,
    };
    out.write(&manifest_name(command), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    Ok(())
}
