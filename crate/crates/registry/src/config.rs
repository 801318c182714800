//! Server configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reviewer {
    pub name: String,
    pub token: String,
}

/// Configured counter offsets for a campaign. Kept apart from measured sums
/// so they can be audited or removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedOffsets {
    pub participants: u64,
    pub visits_blocked: u64,
    pub results_altered: u64,
    pub products_hidden: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    /// JSON snapshot file; state is kept in memory only when absent.
    #[serde(default)]
    pub data_file: Option<PathBuf>,
    #[serde(default)]
    pub reviewers: Vec<Reviewer>,
    #[serde(default)]
    pub seeds: BTreeMap<String, SeedOffsets>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

impl Default for RegistryConfig {
    fn default() -> Self {
        RegistryConfig { listen: default_listen(), data_file: None, reviewers: Vec::new(), seeds: BTreeMap::new() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("reviewer tokens must be non-empty and unique")]
    BadTokens,
}

impl RegistryConfig {
    pub fn from_toml(text: &str) -> Result<RegistryConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<RegistryConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let config = Self::from_toml(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let mut tokens: Vec<&str> = self.reviewers.iter().map(|r| r.token.as_str()).collect();
        tokens.sort_unstable();
        let before = tokens.len();
        tokens.dedup();
        if tokens.len() != before || tokens.iter().any(|t| t.is_empty()) {
            return Err(ConfigError::BadTokens);
        }
        Ok(())
    }

    /// Name of the reviewer holding `token`.
    pub fn reviewer_for(&self, token: &str) -> Option<&str> {
        self.reviewers.iter().find(|r| r.token == token).map(|r| r.name.as_str())
    }

    pub fn seeds_for(&self, campaign_id: &str) -> SeedOffsets {
        self.seeds.get(campaign_id).copied().unwrap_or_default()
    }
}
