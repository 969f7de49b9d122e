//! Run manifests written next to every command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIdentity {
    /// `tu`, `json`, `synthetic` or `generated`.
    pub kind: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    /// SHA-256 over the source files in name order, or over the generator spec.
    pub sha256: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

impl DatasetIdentity {
    pub fn from_files(kind: &str, name: &str, source: &Path, files: &[PathBuf]) -> CliResult<Self> {
        let mut sorted = files.to_vec();
        sorted.sort();
        let mut h = Sha256::new();
        for f in &sorted {
            h.update(f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
            h.update(fs::read(f)?);
        }
        Ok(Self {
            kind: kind.into(),
            name: name.into(),
            source: Some(source.to_path_buf()),
            sha256: hex::encode(h.finalize()),
            summary: serde_json::Value::Null,
        })
    }

    pub fn generated(name: &str, spec: &serde_json::Value) -> Self {
        let digest = Sha256::digest(spec.to_string().as_bytes());
        Self {
            kind: "synthetic".into(),
            name: name.into(),
            source: None,
            sha256: hex::encode(digest),
            summary: spec.clone(),
        }
    }

    pub fn with_summary(mut self, summary: serde_json::Value) -> Self {
        match (&mut self.summary, summary) {
            (serde_json::Value::Object(a), serde_json::Value::Object(b)) => a.extend(b),
            (slot, s) => *slot = s,
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command line; re-running it reproduces the outputs.
    pub argv: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetIdentity>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            dataset: None,
            started_at: now(),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Stamps the end time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.finished_at = now();
        let path = dir.join("manifest.json");
        write_json(&path, &self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
