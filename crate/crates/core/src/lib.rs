//! Core engine for campaign-driven boycott interventions.
//!
//! Campaigns are declarative data ([`campaign::Campaign`]); nothing in this
//! crate knows about any particular campaign. The engine consumes an abstract
//! page model ([`page::PageDoc`]) so the same code path serves the browser
//! client, offline fixture replay and the test suite.

pub mod campaign;
pub mod domain;
pub mod engine;
pub mod matcher;
pub mod metrics;
pub mod page;
pub mod user_state;

pub use campaign::{
    parse_campaign, serialize_campaign, validate_campaign, validate_document, validate_value, CallToAction,
    Campaign, InterventionType, IssueCode, ReviewStatus, Severity, StrengthLevel, Surface,
    ValidationIssue, ValidationReport,
};
pub use domain::{normalize_domain, DomainError};
pub use engine::{
    CueKind, DisclosureCue, ElementAction, Engine, EngineConfig, EngineError, Enrolled,
    InterventionOutcome, NavigationDecision, NavigationOutcome, PageAction, RateState,
};
pub use matcher::{CompiledMatcher, HitKind, TargetHit};
pub use metrics::{
    build_share_message, ContributionSummary, Counter, EventKey, EventRecord, EventTarget,
    MetricsBatch, MetricsStore,
};
pub use page::{
    classify_element, is_third_party_commercial, ElementKind, PageDoc, PageElement, PlatformList,
    Targetability,
};
pub use user_state::{resolve_conflict, whitelist_key, Transition, UserState, UserStateError};
