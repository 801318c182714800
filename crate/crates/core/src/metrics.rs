//! Privacy-limited event capture, contribution counters and batch upload.
//!
//! Events carry no URL, query or element text, and their timestamps are
//! truncated to the hour. The local store keeps a cumulative count per event
//! key `(bucket_time, campaign, surface, intervention, element_kind)`; each
//! batch reports the cumulative count for every key with unacknowledged
//! events. The registry keeps the maximum count it has seen per
//! `(install_id, key)`, so redelivered or reordered batches never double
//! count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, DurationRound, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use uuid::Uuid;

use crate::campaign::{Campaign, InterventionType, Surface};
use crate::page::ElementKind;

pub const BATCH_SCHEMA_VERSION: u32 = 1;

/// Minimum spacing between scheduled uploads, and the maximum time span of
/// events covered by one batch.
pub fn flush_interval() -> Duration {
    Duration::hours(24)
}

pub fn hour_bucket(t: DateTime<Utc>) -> DateTime<Utc> {
    t.duration_trunc(Duration::hours(1)).expect("hour truncation is in range")
}

/// What an event was recorded against: a page element kind, or a top-level
/// navigation. Serialized as a single string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventTarget {
    Element(ElementKind),
    Navigation,
}

impl EventTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            EventTarget::Element(k) => k.as_str(),
            EventTarget::Navigation => "navigation",
        }
    }
}

impl fmt::Display for EventTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "navigation" {
            return Ok(EventTarget::Navigation);
        }
        ElementKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .map(EventTarget::Element)
            .ok_or_else(|| format!("unknown element kind {s:?}"))
    }
}

impl Serialize for EventTarget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub campaign_id: String,
    pub surface: Surface,
    pub intervention: InterventionType,
    pub element_kind: EventTarget,
    pub count: u64,
    pub bucket_time: DateTime<Utc>,
}

/// Identity of an event for aggregation and deduplication (install id aside).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventKey {
    pub bucket_time: DateTime<Utc>,
    pub campaign_id: String,
    pub surface: Surface,
    pub intervention: InterventionType,
    pub element_kind: EventTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counter {
    VisitsBlocked,
    ResultsAltered,
    ProductsHidden,
}

impl EventRecord {
    pub fn key(&self) -> EventKey {
        EventKey {
            bucket_time: self.bucket_time,
            campaign_id: self.campaign_id.clone(),
            surface: self.surface,
            intervention: self.intervention,
            element_kind: self.element_kind,
        }
    }

    /// Which contribution counter this event feeds. Events only exist for
    /// modifications, so `none` never reaches here and every level counts.
    pub fn counter(&self) -> Counter {
        counter_for(self.surface, self.intervention)
    }
}

pub fn counter_for(surface: Surface, intervention: InterventionType) -> Counter {
    match (surface, intervention) {
        (Surface::Navigation, _) => Counter::VisitsBlocked,
        (Surface::AmazonSearch, InterventionType::Filter) => Counter::ProductsHidden,
        _ => Counter::ResultsAltered,
    }
}

impl EventKey {
    pub fn record(&self, count: u64) -> EventRecord {
        EventRecord {
            campaign_id: self.campaign_id.clone(),
            surface: self.surface,
            intervention: self.intervention,
            element_kind: self.element_kind,
            count,
            bucket_time: self.bucket_time,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionSummary {
    pub visits_blocked: u64,
    pub results_altered: u64,
    pub products_hidden: u64,
}

impl ContributionSummary {
    pub fn add(&mut self, counter: Counter, n: u64) {
        match counter {
            Counter::VisitsBlocked => self.visits_blocked += n,
            Counter::ResultsAltered => self.results_altered += n,
            Counter::ProductsHidden => self.products_hidden += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.visits_blocked + self.results_altered + self.products_hidden
    }
}

/// Per-campaign counters over a stream of events.
pub fn fold_events<'e>(events: impl IntoIterator<Item = &'e EventRecord>) -> BTreeMap<String, ContributionSummary> {
    let mut out: BTreeMap<String, ContributionSummary> = BTreeMap::new();
    for e in events {
        out.entry(e.campaign_id.clone()).or_default().add(e.counter(), e.count);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsBatch {
    pub schema_version: u32,
    pub install_id: Uuid,
    pub sent_at: DateTime<Utc>,
    pub events: Vec<EventRecord>,
    /// Campaigns the installation is enrolled in; lets a zero-event batch act
    /// as an enrollment ping for participant counting.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enrolled_campaigns: Vec<String>,
}

impl MetricsBatch {
    pub fn enrollment_ping(install_id: Uuid, campaigns: impl IntoIterator<Item = String>, now: DateTime<Utc>) -> MetricsBatch {
        let enrolled: BTreeSet<String> = campaigns.into_iter().collect();
        MetricsBatch {
            schema_version: BATCH_SCHEMA_VERSION,
            install_id,
            sent_at: now,
            events: Vec::new(),
            enrolled_campaigns: enrolled.into_iter().collect(),
        }
    }

    /// Wire-level checks beyond the serde schema.
    pub fn check_schema(&self) -> Result<(), String> {
        if self.schema_version != BATCH_SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", self.schema_version));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.count == 0 {
                return Err(format!("events[{i}]: count must be positive"));
            }
            if hour_bucket(e.bucket_time) != e.bucket_time {
                return Err(format!("events[{i}]: bucket_time must be on the hour"));
            }
            if e.campaign_id.is_empty() {
                return Err(format!("events[{i}]: empty campaign_id"));
            }
        }
        let buckets = self.events.iter().map(|e| e.bucket_time);
        if let (Some(lo), Some(hi)) = (buckets.clone().min(), buckets.max()) {
            if hi - lo >= flush_interval() {
                return Err("events span 24 hours or more".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Tally {
    total: u64,
    acked: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TallyEntry {
    key: EventKey,
    total: u64,
    acked: u64,
}

mod tally_entries {
    use super::*;

    pub fn serialize<S: Serializer>(map: &BTreeMap<EventKey, Tally>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<TallyEntry> = map
            .iter()
            .map(|(k, t)| TallyEntry { key: k.clone(), total: t.total, acked: t.acked })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<EventKey, Tally>, D::Error> {
        let entries = Vec::<TallyEntry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| (e.key, Tally { total: e.total, acked: e.acked }))
            .collect())
    }
}

/// Local, single-writer metrics store of one installation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsStore {
    created_at: DateTime<Utc>,
    last_flush: Option<DateTime<Utc>>,
    #[serde(with = "tally_entries")]
    tallies: BTreeMap<EventKey, Tally>,
    summary: BTreeMap<String, ContributionSummary>,
}

impl MetricsStore {
    pub fn new(created_at: DateTime<Utc>) -> MetricsStore {
        MetricsStore {
            created_at,
            last_flush: None,
            tallies: BTreeMap::new(),
            summary: BTreeMap::new(),
        }
    }

    /// Appends engine events and updates the contribution counters.
    pub fn record(&mut self, events: &[EventRecord]) {
        for e in events {
            self.tallies.entry(e.key()).or_default().total += e.count;
            self.summary.entry(e.campaign_id.clone()).or_default().add(e.counter(), e.count);
        }
    }

    pub fn contribution_summary(&self, campaign_id: &str) -> ContributionSummary {
        self.summary.get(campaign_id).copied().unwrap_or_default()
    }

    pub fn summaries(&self) -> &BTreeMap<String, ContributionSummary> {
        &self.summary
    }

    pub fn has_pending(&self) -> bool {
        self.tallies.values().any(|t| t.total > t.acked)
    }

    pub fn last_flush(&self) -> Option<DateTime<Utc>> {
        self.last_flush
    }

    pub fn is_due(&self, now: DateTime<Utc>) -> bool {
        now - self.last_flush.unwrap_or(self.created_at) >= flush_interval()
    }

    /// Builds the next upload, if one is due (or `force`d) and anything is
    /// pending. Nothing leaves the pending set until [`acknowledge`] is called
    /// with the returned batch, so a failed upload is simply retried.
    ///
    /// [`acknowledge`]: MetricsStore::acknowledge
    pub fn flush(&self, install_id: Uuid, now: DateTime<Utc>, force: bool) -> Option<MetricsBatch> {
        if !(force || self.is_due(now)) {
            return None;
        }
        let pending: Vec<(&EventKey, &Tally)> = self.tallies.iter().filter(|(_, t)| t.total > t.acked).collect();
        let earliest = pending.iter().map(|(k, _)| k.bucket_time).min()?;
        let horizon = earliest + flush_interval();
        let events = pending
            .into_iter()
            .filter(|(k, _)| k.bucket_time < horizon)
            .map(|(k, t)| k.record(t.total))
            .collect();
        Some(MetricsBatch {
            schema_version: BATCH_SCHEMA_VERSION,
            install_id,
            sent_at: now,
            events,
            enrolled_campaigns: Vec::new(),
        })
    }

    /// Marks a delivered batch as acknowledged by the registry.
    pub fn acknowledge(&mut self, batch: &MetricsBatch) {
        for e in &batch.events {
            if let Some(t) = self.tallies.get_mut(&e.key()) {
                t.acked = t.acked.max(e.count.min(t.total));
            }
        }
        self.last_flush = Some(self.last_flush.map_or(batch.sent_at, |l| l.max(batch.sent_at)));
        // Fully acknowledged keys from closed hours can no longer change.
        let open_bucket = hour_bucket(batch.sent_at);
        self.tallies
            .retain(|k, t| t.total > t.acked || k.bucket_time >= open_bucket);
    }
}

/// Social-share text for a participant's contribution to `campaign`.
pub fn build_share_message(campaign: &Campaign, n: u64, join_url: &str, info_url: &str) -> String {
    format!(
        "I boycotted {n} websites to support {} using Out of Site (a Chrome extension). Join me now: {join_url}. Read about the campaign: {info_url}.",
        campaign.hashtag()
    )
}
