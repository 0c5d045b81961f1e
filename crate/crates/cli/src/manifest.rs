//! Per-run manifest: resolved configuration, timing, version and file digests.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub library_version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    /// SHA-256 of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    /// SHA-256 of every file this run wrote, keyed by path.
    pub output_digests: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {} for digest", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Files read and written by one run.
#[derive(Debug, Default)]
pub struct Io {
    pub inputs: Vec<std::path::PathBuf>,
    pub outputs: Vec<std::path::PathBuf>,
    pub notes: Vec<String>,
}

impl Io {
    pub fn digests(paths: &[std::path::PathBuf]) -> Result<BTreeMap<String, String>> {
        paths.iter().map(|p| Ok((p.display().to_string(), sha256_file(p)?))).collect()
    }
}
