//! Registry operations, independent of the HTTP layer.

use std::collections::BTreeSet;
use std::sync::Arc;

use boycott_core::metrics::counter_for;
use boycott_core::{validate_value, Campaign, Counter, EventKey, MetricsBatch, ReviewStatus, ValidationReport};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{RegistryConfig, SeedOffsets};
use crate::store::{AuditAction, AuditRecord, Checklist, Measured, RegistryState, Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewDecision {
    pub campaign_id: String,
    pub decision: Decision,
    pub checklist: Checklist,
    #[serde(default)]
    pub reviewer_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestAck {
    pub accepted_events: usize,
    pub duplicate_events: usize,
    /// Events and enrollment entries for campaigns that are unknown or not
    /// approved; they are dropped.
    pub dropped_unknown_campaign: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub campaign_id: String,
    pub participants: u64,
    pub visits_blocked: u64,
    pub results_altered: u64,
    pub products_hidden: u64,
    pub measured: MeasuredStats,
    pub seeds: SeedOffsets,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredStats {
    pub participants: u64,
    pub visits_blocked: u64,
    pub results_altered: u64,
    pub products_hidden: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("VALIDATION_FAILED")]
    ValidationFailed(ValidationReport),
    #[error("DUPLICATE_ID: {0}")]
    DuplicateId(String),
    #[error("UNAUTHORIZED")]
    Unauthorized,
    #[error("INVALID_TRANSITION: {0}")]
    InvalidTransition(String),
    #[error("CHECKLIST_INCONSISTENT: {0}")]
    ChecklistInconsistent(String),
    #[error("UNKNOWN_CAMPAIGN: {0}")]
    UnknownCampaign(String),
    #[error("SCHEMA_ERROR: {0}")]
    SchemaError(String),
    #[error("STORAGE_ERROR: {0}")]
    Storage(#[from] StoreError),
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::ValidationFailed(_) => "VALIDATION_FAILED",
            RegistryError::DuplicateId(_) => "DUPLICATE_ID",
            RegistryError::Unauthorized => "UNAUTHORIZED",
            RegistryError::InvalidTransition(_) => "INVALID_TRANSITION",
            RegistryError::ChecklistInconsistent(_) => "CHECKLIST_INCONSISTENT",
            RegistryError::UnknownCampaign(_) => "UNKNOWN_CAMPAIGN",
            RegistryError::SchemaError(_) => "SCHEMA_ERROR",
            RegistryError::Storage(_) => "STORAGE_ERROR",
        }
    }
}

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct Registry {
    store: Store,
    config: RegistryConfig,
    clock: Clock,
}

/// Dedup key for a metrics event of one installation.
fn metric_key(k: &EventKey) -> String {
    format!(
        "{}|{}|{}|{}|{}",
        k.bucket_time.to_rfc3339_opts(SecondsFormat::Secs, true),
        k.campaign_id,
        k.surface,
        k.intervention,
        k.element_kind
    )
}

fn add(m: &mut Measured, counter: Counter, n: u64) {
    match counter {
        Counter::VisitsBlocked => m.visits_blocked += n,
        Counter::ResultsAltered => m.results_altered += n,
        Counter::ProductsHidden => m.products_hidden += n,
    }
}

fn is_approved(state: &RegistryState, id: &str) -> bool {
    state.campaigns.get(id).is_some_and(Campaign::is_approved)
}

fn append_audit(state: &mut RegistryState, record: AuditRecord) {
    let seq = state.audit.len() as u64 + 1;
    state.audit.push(AuditRecord { seq, ..record });
}

fn audit(campaign_id: &str, action: AuditAction, actor: &str, at: DateTime<Utc>, to: ReviewStatus) -> AuditRecord {
    AuditRecord {
        seq: 0,
        campaign_id: campaign_id.to_owned(),
        action,
        actor: actor.to_owned(),
        at,
        from: None,
        to,
        checklist: None,
        note: String::new(),
    }
}

fn parse_document(doc: &Value) -> Result<Campaign, RegistryError> {
    let report = validate_value(doc);
    if !report.is_valid() {
        return Err(RegistryError::ValidationFailed(report));
    }
    serde_json::from_value(doc.clone()).map_err(|e| RegistryError::SchemaError(e.to_string()))
}

impl Registry {
    pub fn new(store: Store, config: RegistryConfig) -> Registry {
        Registry::with_clock(store, config, Arc::new(Utc::now))
    }

    pub fn with_clock(store: Store, config: RegistryConfig, clock: Clock) -> Registry {
        Registry { store, config, clock }
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.config
    }

    fn reviewer(&self, token: Option<&str>) -> Result<String, RegistryError> {
        token
            .and_then(|t| self.config.reviewer_for(t))
            .map(str::to_owned)
            .ok_or(RegistryError::Unauthorized)
    }

    /// Stores a validated campaign document as `submitted`, whatever status
    /// the document carries. Nothing submitted is served until approved.
    pub fn submit_campaign(&self, doc: &Value) -> Result<String, RegistryError> {
        let mut campaign = parse_document(doc)?;
        campaign.review_status = ReviewStatus::Submitted;
        let now = (self.clock)();
        self.store.transact(|s| {
            if s.campaigns.contains_key(&campaign.id) {
                return Err(RegistryError::DuplicateId(campaign.id.clone()));
            }
            let id = campaign.id.clone();
            append_audit(s, audit(&id, AuditAction::Submit, "submitter", now, ReviewStatus::Submitted));
            s.campaigns.insert(id.clone(), campaign);
            Ok(id)
        })
    }

    /// Applies a reviewer's decision. Approval requires every checklist flag
    /// to be false; rejection requires a raised flag or a note.
    pub fn review_campaign(
        &self,
        id: &str,
        decision: &ReviewDecision,
        token: Option<&str>,
    ) -> Result<ReviewStatus, RegistryError> {
        let actor = self.reviewer(token)?;
        if decision.campaign_id != id {
            return Err(RegistryError::SchemaError("campaign_id does not match the path".into()));
        }
        let now = (self.clock)();
        self.store.transact(|s| {
            let current = s
                .campaigns
                .get(id)
                .ok_or_else(|| RegistryError::UnknownCampaign(id.to_owned()))?
                .review_status;
            let to = match decision.decision {
                Decision::Approved => ReviewStatus::Approved,
                Decision::Rejected => ReviewStatus::Rejected,
            };
            let next = current.transition(to).map_err(|e| RegistryError::InvalidTransition(e.to_string()))?;
            match decision.decision {
                Decision::Approved if decision.checklist.any() => {
                    return Err(RegistryError::ChecklistInconsistent(
                        "approval requires every checklist flag to be false".into(),
                    ))
                }
                Decision::Rejected if !decision.checklist.any() && decision.reviewer_note.trim().is_empty() => {
                    return Err(RegistryError::ChecklistInconsistent(
                        "rejection requires a raised checklist flag or a note".into(),
                    ))
                }
                _ => {}
            }
            s.campaigns.get_mut(id).expect("checked above").review_status = next;
            if next == ReviewStatus::Approved {
                s.dataset_version += 1;
            }
            append_audit(
                s,
                AuditRecord {
                    from: Some(current),
                    checklist: Some(decision.checklist),
                    note: decision.reviewer_note.clone(),
                    ..audit(id, AuditAction::Review, &actor, now, next)
                },
            );
            Ok(next)
        })
    }

    /// Replaces the targets and policies of an approved campaign. Reviewer
    /// credentials are required, so edits stay behind the gatekeeper.
    pub fn update_campaign(&self, id: &str, doc: &Value, token: Option<&str>) -> Result<u64, RegistryError> {
        let actor = self.reviewer(token)?;
        let mut campaign = parse_document(doc)?;
        if campaign.id != id {
            return Err(RegistryError::SchemaError("campaign id does not match the path".into()));
        }
        let now = (self.clock)();
        self.store.transact(|s| {
            let current = s.campaigns.get(id).ok_or_else(|| RegistryError::UnknownCampaign(id.to_owned()))?;
            if !current.is_approved() {
                return Err(RegistryError::InvalidTransition(format!(
                    "only approved campaigns can be updated; {id} is {:?}",
                    current.review_status
                )));
            }
            campaign.review_status = ReviewStatus::Approved;
            if *current == campaign {
                return Ok(s.dataset_version);
            }
            s.campaigns.insert(id.to_owned(), campaign);
            s.dataset_version += 1;
            append_audit(
                s,
                AuditRecord {
                    from: Some(ReviewStatus::Approved),
                    ..audit(id, AuditAction::Update, &actor, now, ReviewStatus::Approved)
                },
            );
            Ok(s.dataset_version)
        })
    }

    /// The approved set, ordered by id, with the dataset version.
    pub fn list_active_campaigns(&self) -> (u64, Vec<Campaign>) {
        self.store.read(|s| {
            let list = s.campaigns.values().filter(|c| c.is_approved()).cloned().collect();
            (s.dataset_version, list)
        })
    }

    pub fn active_campaign(&self, id: &str) -> Result<Campaign, RegistryError> {
        self.store.read(|s| {
            s.campaigns
                .get(id)
                .filter(|c| c.is_approved())
                .cloned()
                .ok_or_else(|| RegistryError::UnknownCampaign(id.to_owned()))
        })
    }

    pub fn review_status(&self, id: &str) -> Option<ReviewStatus> {
        self.store.read(|s| s.campaigns.get(id).map(|c| c.review_status))
    }

    pub fn audit_log(&self) -> Vec<AuditRecord> {
        self.store.read(|s| s.audit.clone())
    }

    /// Ingests a batch. Per installation and event key the registry keeps the
    /// highest count seen and adds only the increase to the aggregates, so
    /// duplicate and reordered deliveries have no effect.
    pub fn ingest_batch(&self, batch: &MetricsBatch) -> Result<IngestAck, RegistryError> {
        batch.check_schema().map_err(RegistryError::SchemaError)?;
        self.store.transact(|s| {
            let mut ack = IngestAck { accepted_events: 0, duplicate_events: 0, dropped_unknown_campaign: 0 };
            let mut seen_campaigns: BTreeSet<String> = BTreeSet::new();
            for e in &batch.events {
                if !is_approved(s, &e.campaign_id) {
                    ack.dropped_unknown_campaign += 1;
                    continue;
                }
                seen_campaigns.insert(e.campaign_id.clone());
                let slot = s.metrics.entry(batch.install_id).or_default().entry(metric_key(&e.key())).or_insert(0);
                if e.count > *slot {
                    let delta = e.count - *slot;
                    *slot = e.count;
                    add(s.measured.entry(e.campaign_id.clone()).or_default(), counter_for(e.surface, e.intervention), delta);
                    ack.accepted_events += 1;
                } else {
                    ack.duplicate_events += 1;
                }
            }
            for id in &batch.enrolled_campaigns {
                if is_approved(s, id) {
                    seen_campaigns.insert(id.clone());
                } else {
                    ack.dropped_unknown_campaign += 1;
                }
            }
            for id in seen_campaigns {
                s.participants.entry(id).or_default().insert(batch.install_id);
            }
            Ok(ack)
        })
    }

    /// Displayed counters: measured sums plus configured seeds.
    pub fn get_stats(&self, id: &str) -> Result<AggregateStats, RegistryError> {
        let seeds = self.config.seeds_for(id);
        self.store.read(|s| {
            if !is_approved(s, id) {
                return Err(RegistryError::UnknownCampaign(id.to_owned()));
            }
            let m = s.measured.get(id).copied().unwrap_or_default();
            let measured = MeasuredStats {
                participants: s.participants.get(id).map_or(0, |p| p.len() as u64),
                visits_blocked: m.visits_blocked,
                results_altered: m.results_altered,
                products_hidden: m.products_hidden,
            };
            Ok(AggregateStats {
                campaign_id: id.to_owned(),
                participants: measured.participants + seeds.participants,
                visits_blocked: measured.visits_blocked + seeds.visits_blocked,
                results_altered: measured.results_altered + seeds.results_altered,
                products_hidden: measured.products_hidden + seeds.products_hidden,
                measured,
                seeds,
            })
        })
    }
}
