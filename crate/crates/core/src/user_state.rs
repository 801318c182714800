//! Per-installation participant state.
//!
//! Transitions are pure: every operation takes `&self` and returns the
//! successor state, so a transition log replays to the same final state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use uuid::Uuid;

use crate::campaign::{Campaign, StrengthLevel};
use crate::domain::normalize_domain;
use crate::engine::Enrolled;
use crate::matcher::{HitKind, TargetHit};

/// Current on-disk schema version. Version 1 documents (no `priorities`) are
/// migrated on load.
pub const SCHEMA_VERSION: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enrollment {
    pub enabled: bool,
    pub level: StrengthLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UserStateError {
    #[error("UNKNOWN_CAMPAIGN: {0:?} is not a known approved campaign")]
    UnknownCampaign(String),
    #[error("NOT_ENROLLED: {0:?}")]
    NotEnrolled(String),
    #[error("INVALID_PRIORITIES: must be a permutation of the enabled campaigns")]
    InvalidPriorities,
    #[error("UNSUPPORTED_SCHEMA: version {0}")]
    UnsupportedSchema(u64),
    #[error("CORRUPT_STATE: {0}")]
    Corrupt(String),
}

/// A recorded state transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transition {
    Enroll { campaign_id: String, level: StrengthLevel },
    SetLevel { campaign_id: String, level: StrengthLevel },
    Toggle { campaign_id: String, enabled: bool },
    AddWhitelist { target: String },
    RemoveWhitelist { target: String },
    SetPriorities { order: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserState {
    schema_version: u32,
    install_id: Uuid,
    enrollments: BTreeMap<String, Enrollment>,
    whitelist: BTreeSet<String>,
    /// Enabled campaign ids, highest priority first.
    priorities: Vec<String>,
}

/// Canonical whitelist key: the registrable domain for domain-shaped entries,
/// otherwise the lowercased, trimmed label.
pub fn whitelist_key(target: &str) -> String {
    let trimmed = target.trim();
    if trimmed.contains('.') && !trimmed.contains(char::is_whitespace) {
        if let Ok(d) = normalize_domain(trimmed) {
            return d;
        }
    }
    trimmed.to_lowercase()
}

fn require_approved(catalog: &[Campaign], id: &str) -> Result<(), UserStateError> {
    if catalog.iter().any(|c| c.id == id && c.is_approved()) {
        Ok(())
    } else {
        Err(UserStateError::UnknownCampaign(id.to_owned()))
    }
}

impl UserState {
    /// Fresh installation with a random 128-bit install id.
    pub fn fresh() -> UserState {
        UserState::with_install_id(Uuid::new_v4())
    }

    pub fn with_install_id(install_id: Uuid) -> UserState {
        UserState {
            schema_version: SCHEMA_VERSION,
            install_id,
            enrollments: BTreeMap::new(),
            whitelist: BTreeSet::new(),
            priorities: Vec::new(),
        }
    }

    pub fn install_id(&self) -> Uuid {
        self.install_id
    }

    pub fn enrollments(&self) -> &BTreeMap<String, Enrollment> {
        &self.enrollments
    }

    pub fn enrollment(&self, campaign_id: &str) -> Option<Enrollment> {
        self.enrollments.get(campaign_id).copied()
    }

    pub fn whitelist(&self) -> &BTreeSet<String> {
        &self.whitelist
    }

    pub fn priorities(&self) -> &[String] {
        &self.priorities
    }

    pub fn is_enabled(&self, campaign_id: &str) -> bool {
        self.enrollments.get(campaign_id).is_some_and(|e| e.enabled)
    }

    /// Enrolls (or re-enables) a campaign. A newly enabled campaign takes the
    /// lowest priority; an already enabled one keeps its place.
    pub fn enroll(&self, catalog: &[Campaign], campaign_id: &str, level: StrengthLevel) -> Result<UserState, UserStateError> {
        require_approved(catalog, campaign_id)?;
        let mut next = self.clone();
        next.enrollments.insert(campaign_id.to_owned(), Enrollment { enabled: true, level });
        if !next.priorities.iter().any(|p| p == campaign_id) {
            next.priorities.push(campaign_id.to_owned());
        }
        Ok(next)
    }

    pub fn set_level(&self, catalog: &[Campaign], campaign_id: &str, level: StrengthLevel) -> Result<UserState, UserStateError> {
        require_approved(catalog, campaign_id)?;
        let mut next = self.clone();
        let entry = next
            .enrollments
            .get_mut(campaign_id)
            .ok_or_else(|| UserStateError::NotEnrolled(campaign_id.to_owned()))?;
        entry.level = level;
        Ok(next)
    }

    /// Enables or disables an enrolled campaign. Disabling drops it from the
    /// priority order; enabling appends it at the lowest priority.
    pub fn toggle(&self, catalog: &[Campaign], campaign_id: &str, enabled: bool) -> Result<UserState, UserStateError> {
        require_approved(catalog, campaign_id)?;
        let mut next = self.clone();
        let entry = next
            .enrollments
            .get_mut(campaign_id)
            .ok_or_else(|| UserStateError::NotEnrolled(campaign_id.to_owned()))?;
        entry.enabled = enabled;
        next.priorities.retain(|p| p != campaign_id);
        if enabled {
            next.priorities.push(campaign_id.to_owned());
        }
        Ok(next)
    }

    /// Replaces the priority order; `order` must be a permutation of the
    /// enabled campaigns.
    pub fn set_priorities(&self, order: &[String]) -> Result<UserState, UserStateError> {
        let wanted: BTreeSet<&str> = order.iter().map(String::as_str).collect();
        let enabled: BTreeSet<&str> = self.priorities.iter().map(String::as_str).collect();
        if wanted != enabled || wanted.len() != order.len() {
            return Err(UserStateError::InvalidPriorities);
        }
        let mut next = self.clone();
        next.priorities = order.to_vec();
        Ok(next)
    }

    pub fn add_whitelist(&self, target: &str) -> UserState {
        let mut next = self.clone();
        next.whitelist.insert(whitelist_key(target));
        next
    }

    pub fn remove_whitelist(&self, target: &str) -> UserState {
        let mut next = self.clone();
        next.whitelist.remove(&whitelist_key(target));
        next
    }

    /// Matches by target label (case-insensitively) or, for domain-shaped
    /// input, by registrable-domain equality.
    pub fn is_whitelisted(&self, target_or_domain: &str) -> bool {
        !self.whitelist.is_empty() && self.whitelist.contains(&whitelist_key(target_or_domain))
    }

    /// 0 is the highest priority. Enrolled-but-unranked campaigns sort last.
    pub fn priority_of(&self, campaign_id: &str) -> usize {
        self.priorities
            .iter()
            .position(|p| p == campaign_id)
            .unwrap_or(usize::MAX)
    }

    /// Enabled campaigns from `catalog`, highest priority first.
    pub fn enrolled<'a>(&self, catalog: &'a [Campaign]) -> Vec<Enrolled<'a>> {
        self.priorities
            .iter()
            .filter_map(|id| {
                let campaign = catalog.iter().find(|c| &c.id == id && c.is_approved())?;
                let level = self.enrollments.get(id)?.level;
                Some(Enrolled { campaign, level })
            })
            .collect()
    }

    pub fn apply(&self, catalog: &[Campaign], t: &Transition) -> Result<UserState, UserStateError> {
        match t {
            Transition::Enroll { campaign_id, level } => self.enroll(catalog, campaign_id, *level),
            Transition::SetLevel { campaign_id, level } => self.set_level(catalog, campaign_id, *level),
            Transition::Toggle { campaign_id, enabled } => self.toggle(catalog, campaign_id, *enabled),
            Transition::AddWhitelist { target } => Ok(self.add_whitelist(target)),
            Transition::RemoveWhitelist { target } => Ok(self.remove_whitelist(target)),
            Transition::SetPriorities { order } => self.set_priorities(order),
        }
    }

    pub fn replay<'t>(
        &self,
        catalog: &[Campaign],
        log: impl IntoIterator<Item = &'t Transition>,
    ) -> Result<UserState, UserStateError> {
        log.into_iter().try_fold(self.clone(), |state, t| state.apply(catalog, t))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("user state serializes")
    }

    /// Loads a persisted state, migrating older schema versions forward.
    pub fn from_json(input: &str) -> Result<UserState, UserStateError> {
        let mut doc: Value = serde_json::from_str(input).map_err(|e| UserStateError::Corrupt(e.to_string()))?;
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| UserStateError::Corrupt("expected a JSON object".into()))?;
        let version = obj.get("schema_version").and_then(Value::as_u64).unwrap_or(1);
        match version {
            1 => {
                let enabled: Vec<Value> = obj
                    .get("enrollments")
                    .and_then(Value::as_object)
                    .map(|m| {
                        m.iter()
                            .filter(|(_, e)| e.get("enabled").and_then(Value::as_bool) == Some(true))
                            .map(|(id, _)| Value::String(id.clone()))
                            .collect()
                    })
                    .unwrap_or_default();
                obj.insert("priorities".into(), Value::Array(enabled));
                obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
            }
            v if v == u64::from(SCHEMA_VERSION) => {}
            v => return Err(UserStateError::UnsupportedSchema(v)),
        }
        let state: UserState = serde_json::from_value(doc).map_err(|e| UserStateError::Corrupt(e.to_string()))?;
        let enabled: BTreeSet<&str> = state
            .enrollments
            .iter()
            .filter(|(_, e)| e.enabled)
            .map(|(id, _)| id.as_str())
            .collect();
        let ranked: BTreeSet<&str> = state.priorities.iter().map(String::as_str).collect();
        if enabled != ranked || ranked.len() != state.priorities.len() {
            return Err(UserStateError::InvalidPriorities);
        }
        Ok(state)
    }
}

fn hit_order_key(h: &TargetHit, u: &UserState) -> (usize, String, HitKind, usize) {
    (u.priority_of(&h.campaign_id), h.campaign_id.clone(), h.kind, h.position)
}

/// Picks the winning hit: the campaign with the highest user priority (ties by
/// campaign id), then within that campaign a domain hit over a keyword hit,
/// then the earliest position.
pub fn resolve_conflict<'h>(hits: &'h [TargetHit], u: &UserState) -> Option<&'h TargetHit> {
    hits.iter().min_by_key(|h| hit_order_key(h, u))
}
