//! Campaign registry service.
//!
//! Campaigns are submitted, reviewed against a fixed checklist and only then
//! distributed. Clients upload privacy-limited metrics batches; the registry
//! deduplicates them and serves aggregate statistics with configured seed
//! offsets.

pub mod config;
pub mod http;
pub mod service;
pub mod store;

pub use config::{RegistryConfig, Reviewer, SeedOffsets};
pub use http::router;
pub use service::{AggregateStats, Decision, IngestAck, Registry, RegistryError, ReviewDecision};
pub use store::{AuditRecord, Checklist, FilePersistence, MemoryPersistence, Persistence, Store};
