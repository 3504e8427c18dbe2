//! Run manifest: canonical config hash, code version, timestamps, and the
//! output file list.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Hash of the normalized config. Serialization goes through a JSON value
/// whose maps sort their keys, so reordering keys in the file cannot change
/// the hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Every file in the output directory, including this manifest.
    pub files: Vec<String>,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub struct ManifestBuilder {
    hash: String,
    started: u64,
    files: Vec<String>,
}

impl ManifestBuilder {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self { hash: config_hash(config), started: now_unix(), files: vec!["manifest.json".into()] }
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn write(mut self, dir: &Path) -> std::io::Result<()> {
        self.files.sort();
        let manifest = RunManifest {
            config_hash: self.hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started,
            finished_unix: now_unix(),
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}
