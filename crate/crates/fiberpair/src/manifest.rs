use std::path::Path;

use fiberpair_core::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::canonical_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn config_hash(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let digest = Sha256::digest(canonical_json(cfg)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, seed: Option<u64>) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_sha256: config_hash(cfg)?,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        })
    }

    /// Every listed output must exist and be non-empty.
    pub fn check_outputs(&self, dir: &Path) -> anyhow::Result<()> {
        for name in &self.outputs {
            let meta = std::fs::metadata(dir.join(name))
                .map_err(|e| anyhow::anyhow!("declared output {name} is missing: {e}"))?;
            anyhow::ensure!(meta.len() > 0, "declared output {name} is empty");
        }
        Ok(())
    }
}
