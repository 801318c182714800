//! Registry state and its persistence.
//!
//! All mutations go through [`Store::transact`]: the closure runs against a
//! copy of the state, the copy is persisted, and only then replaces the live
//! state. A failed closure or failed write leaves both untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use boycott_core::{Campaign, ReviewStatus};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checklist {
    pub splc_hate_group: bool,
    pub protected_class_targeting: bool,
    pub state_actor: bool,
}

impl Checklist {
    pub fn any(&self) -> bool {
        self.splc_hate_group || self.protected_class_targeting || self.state_actor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditAction {
    Submit,
    Review,
    Update,
}

/// Append-only record of a change to a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub campaign_id: String,
    pub action: AuditAction,
    pub actor: String,
    pub at: DateTime<Utc>,
    pub from: Option<ReviewStatus>,
    pub to: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checklist: Option<Checklist>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Measured sums per campaign.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measured {
    pub visits_blocked: u64,
    pub results_altered: u64,
    pub products_hidden: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryState {
    pub campaigns: BTreeMap<String, Campaign>,
    pub audit: Vec<AuditRecord>,
    /// Bumped on every change to the approved set or its contents.
    pub dataset_version: u64,
    /// Highest count seen per install and event key.
    pub metrics: BTreeMap<Uuid, BTreeMap<String, u64>>,
    pub measured: BTreeMap<String, Measured>,
    pub participants: BTreeMap<String, BTreeSet<Uuid>>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage I/O on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt snapshot {path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
}

/// Where snapshots go.
pub trait Persistence: Send + Sync {
    fn load(&self) -> Result<Option<RegistryState>, StoreError>;
    fn save(&self, state: &RegistryState) -> Result<(), StoreError>;
}

/// Keeps nothing beyond the process lifetime.
#[derive(Debug, Default)]
pub struct MemoryPersistence;

impl Persistence for MemoryPersistence {
    fn load(&self) -> Result<Option<RegistryState>, StoreError> {
        Ok(None)
    }

    fn save(&self, _: &RegistryState) -> Result<(), StoreError> {
        Ok(())
    }
}

/// JSON snapshot replaced atomically (write to a sibling temp file, fsync,
/// rename).
#[derive(Debug)]
pub struct FilePersistence {
    path: PathBuf,
}

impl FilePersistence {
    pub fn new(path: impl Into<PathBuf>) -> FilePersistence {
        FilePersistence { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn io(&self, source: std::io::Error) -> StoreError {
        StoreError::Io { path: self.path.clone(), source }
    }
}

impl Persistence for FilePersistence {
    fn load(&self) -> Result<Option<RegistryState>, StoreError> {
        match std::fs::read(&self.path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|source| StoreError::Corrupt { path: self.path.clone(), source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(self.io(e)),
        }
    }

    fn save(&self, state: &RegistryState) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec(state).expect("state serializes");
        let mut tmp = self.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut f = std::fs::File::create(&tmp).map_err(|e| self.io(e))?;
        f.write_all(&bytes).map_err(|e| self.io(e))?;
        f.sync_all().map_err(|e| self.io(e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| self.io(e))
    }
}

pub struct Store {
    state: Mutex<RegistryState>,
    backend: Box<dyn Persistence>,
}

impl Store {
    pub fn open(backend: Box<dyn Persistence>) -> Result<Store, StoreError> {
        let state = backend.load()?.unwrap_or_default();
        Ok(Store { state: Mutex::new(state), backend })
    }

    pub fn memory() -> Store {
        Store::open(Box::new(MemoryPersistence)).expect("memory store never fails to open")
    }

    pub fn read<R>(&self, f: impl FnOnce(&RegistryState) -> R) -> R {
        f(&self.state.lock().unwrap_or_else(|p| p.into_inner()))
    }

    /// Runs `f` on a copy of the state and commits the copy iff `f` succeeds
    /// and the snapshot is saved.
    pub fn transact<R, E: From<StoreError>>(
        &self,
        f: impl FnOnce(&mut RegistryState) -> Result<R, E>,
    ) -> Result<R, E> {
        let mut live = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let mut next = live.clone();
        let out = f(&mut next)?;
        if next != *live {
            self.backend.save(&next)?;
            *live = next;
        }
        Ok(out)
    }
}
