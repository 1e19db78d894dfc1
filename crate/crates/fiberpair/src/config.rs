use std::path::Path;

use anyhow::Context;
use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl ConfigError {
    /// Dotted key path of the offending value, when known.
    pub fn key_path(&self) -> Option<&str> {
        match self {
            ConfigError::Parse { path, .. } => Some(path),
            ConfigError::Invalid(Error::InvalidConfig { path, .. }) => Some(path),
            _ => None,
        }
    }
}

/// Parse and validate the sections every command uses.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Canonical JSON of the parsed config; formatting and key order do not matter.
pub fn canonical_json(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let value = serde_json::to_value(cfg).context("serializing config")?;
    Ok(serde_json::to_string(&value)?)
}
