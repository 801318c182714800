//! Authoring tools for campaign organizers: lint campaign files, expand
//! targets from an ownership graph, and replay saved fixtures through the
//! engine offline.

pub mod graph;
pub mod lint;
pub mod replay;

use std::path::Path;

use boycott_core::{parse_campaign, validate_campaign, Campaign};

pub use graph::{default_kinds, Expansion, GraphError, OwnershipGraph};
pub use lint::{lint_file, LintResult};
pub use replay::{parse_fixture, Fixture, ReplayOptions, ReplayReport, Replayer};

/// Process exit statuses shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    /// Validation or assertion failure.
    pub const FAILED: u8 = 1;
    /// I/O or usage problem.
    pub const IO: u8 = 2;
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

impl LoadError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LoadError::Io { .. } => exit::IO,
            LoadError::Invalid { .. } => exit::FAILED,
        }
    }
}

/// Reads a campaign file and checks every campaign invariant.
pub fn load_campaign(path: &Path) -> Result<Campaign, LoadError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io { path: name.clone(), source })?;
    let campaign = parse_campaign(&bytes).map_err(|e| LoadError::Invalid { path: name.clone(), reason: e.to_string() })?;
    let report = validate_campaign(&campaign);
    if let Some(first) = report.errors().next() {
        return Err(LoadError::Invalid { path: name, reason: format!("{} at {}: {}", first.code, first.path, first.message) });
    }
    Ok(campaign)
}

pub fn load_graph(path: &Path) -> Result<OwnershipGraph, LoadError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: name.clone(), source })?;
    OwnershipGraph::parse(&text).map_err(|e| LoadError::Invalid { path: name, reason: e.to_string() })
}
