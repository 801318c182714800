//! Decides and renders interventions for pages and navigations.
//!
//! The engine is a pure function of its inputs: the page, the enrolled
//! campaigns with their strength levels, the user state, a compiled matcher,
//! the rate-limit state and the current time. New rate-limit state is
//! returned rather than mutated in place.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::campaign::{Campaign, InterventionType, StrengthLevel, Surface, COMPANY_PLACEHOLDER};
use crate::domain::{normalize_domain, DomainError};
use crate::matcher::{CompiledMatcher, TargetHit};
use crate::metrics::{hour_bucket, EventRecord, EventTarget};
use crate::page::{classify_element, PageDoc, PageElement, Targetability};
use crate::user_state::{resolve_conflict, UserState};

pub const DEFAULT_CTA_DAILY_CAP: u32 = 10;

/// Everything except RFC 3986 unreserved characters gets escaped.
const MAILTO_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Call-to-action annotations allowed per UTC day.
    pub cta_daily_cap: u32,
    /// After an interrupted navigation, further visits to the same domain are
    /// let through for this long.
    pub grace_window: Duration,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { cta_daily_cap: DEFAULT_CTA_DAILY_CAP, grace_window: Duration::hours(1) }
    }
}

/// A campaign the user participates in, with its strength level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enrolled<'a> {
    pub campaign: &'a Campaign,
    pub level: StrengthLevel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateState {
    /// Last interrupted navigation per registrable domain.
    pub last_interrupt: BTreeMap<String, DateTime<Utc>>,
    pub cta_count_today: u32,
    pub cta_day: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum PageAction {
    Keep,
    Remove,
    MoveToBottom { new_rank: u32 },
    Overlay { message: String },
    AnnotateCta { prompt: String, mailto: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementAction {
    pub element_id: String,
    pub action: PageAction,
    /// The intervention actually applied; `none` for kept elements. Differs
    /// from the configured policy when a call to action is over budget.
    pub intervention: InterventionType,
    /// The winning hit, if any. Also set on kept elements whose winning
    /// campaign maps this surface and level to `none`.
    pub cause: Option<TargetHit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    HiddenBanner,
    WhitelistPrompt,
    BadgeCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureCue {
    pub kind: CueKind,
    pub text: String,
    pub related_targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionOutcome {
    /// One action per page element, in page order.
    pub actions: Vec<ElementAction>,
    pub cues: Vec<DisclosureCue>,
    /// One event per non-keep action, in page order.
    pub events: Vec<EventRecord>,
    pub hidden_count: usize,
}

impl InterventionOutcome {
    /// The page as displayed: removed elements dropped, elements in their
    /// original order and rank except moved ones, which follow at the bottom
    /// with their new ranks. Untouched elements are carried over unchanged.
    pub fn render(&self, page: &PageDoc) -> PageDoc {
        let by_id: BTreeMap<&str, &PageAction> =
            self.actions.iter().map(|a| (a.element_id.as_str(), &a.action)).collect();
        let mut kept = Vec::new();
        let mut moved: Vec<PageElement> = Vec::new();
        for e in &page.elements {
            match by_id.get(e.id.as_str()) {
                Some(PageAction::Remove) => {}
                Some(PageAction::MoveToBottom { new_rank }) => {
                    let mut m = e.clone();
                    m.rank = *new_rank;
                    moved.push(m);
                }
                _ => kept.push(e.clone()),
            }
        }
        moved.sort_by_key(|e| e.rank);
        kept.extend(moved);
        PageDoc { elements: kept, ..page.clone() }
    }

    pub fn action_for(&self, element_id: &str) -> Option<&ElementAction> {
        self.actions.iter().find(|a| a.element_id == element_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum NavigationDecision {
    Allow,
    Block { campaign_id: String, message: String },
    Redirect { campaign_id: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationOutcome {
    pub decision: NavigationDecision,
    pub cause: Option<TargetHit>,
    pub event: Option<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("SURFACE_UNSUPPORTED: {0}")]
    SurfaceUnsupported(Surface),
    #[error(transparent)]
    NotAUrl(#[from] DomainError),
    #[error("DUPLICATE_ELEMENT_ID: {0}")]
    DuplicateElementId(String),
}

pub fn gray_out_message(target: &str, campaign: &Campaign) -> String {
    format!("{target} is targeted by the campaign {}", campaign.name)
}

pub fn hidden_banner_text(campaign: &Campaign) -> String {
    format!("Out of Site has hidden some results because of the {} campaign", campaign.name)
}

fn cta_prompt(target: &str, campaign: &Campaign) -> String {
    format!("{}. {}", gray_out_message(target, campaign), campaign.cta.render_prompt(target))
}

/// `mailto:` link addressed to the campaign contact, with subject and body
/// filled in for `company`.
pub fn cta_mailto(company: &str, campaign: &Campaign) -> String {
    let subject = campaign.cta.email_subject.replace(COMPANY_PLACEHOLDER, company);
    let body = campaign.cta.email_body.replace(COMPANY_PLACEHOLDER, company);
    format!(
        "mailto:{}?subject={}&body={}",
        campaign.cta.contact_email,
        utf8_percent_encode(&subject, MAILTO_ESCAPE),
        utf8_percent_encode(&body, MAILTO_ESCAPE)
    )
}

/// The configured intervention, with anything the surface does not permit
/// read as `none`.
pub fn select_intervention(campaign: &Campaign, surface: Surface, level: StrengthLevel) -> InterventionType {
    let configured = campaign.policy(surface, level);
    if surface.permits(configured) {
        configured
    } else {
        InterventionType::None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Engine {
    pub config: EngineConfig,
}

struct Filtered<'a> {
    by_id: BTreeMap<&'a str, Enrolled<'a>>,
}

impl<'a> Filtered<'a> {
    fn new(enrolled: &[Enrolled<'a>]) -> Self {
        Filtered { by_id: enrolled.iter().map(|e| (e.campaign.id.as_str(), *e)).collect() }
    }

    /// Drops hits of campaigns not enrolled (or disabled) and hits on
    /// whitelisted targets.
    fn retain(&self, hits: &mut Vec<TargetHit>, u: &UserState) {
        hits.retain(|h| {
            self.by_id.contains_key(h.campaign_id.as_str())
                && u.enrollment(&h.campaign_id).is_none_or(|e| e.enabled)
                && !u.is_whitelisted(&h.target_label)
        });
    }
}

fn element_hits(e: &PageElement, m: &CompiledMatcher) -> Vec<TargetHit> {
    let mut hits = m.text_matches(&e.text);
    for (i, url) in e.urls.iter().enumerate() {
        if let Ok(found) = m.url_hits(url) {
            hits.extend(found.into_iter().map(|h| TargetHit { position: i, ..h }));
        }
    }
    hits
}

fn push_distinct(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|x| x == item) {
        list.push(item.to_owned());
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Engine {
        Engine { config }
    }

    /// Spends one unit of the daily call-to-action budget if any is left.
    pub fn consume_cta(&self, rate: &RateState, now: DateTime<Utc>) -> (bool, RateState) {
        let mut next = rate.clone();
        let today = now.date_naive();
        if next.cta_day != Some(today) {
            next.cta_day = Some(today);
            next.cta_count_today = 0;
        }
        let permitted = next.cta_count_today < self.config.cta_daily_cap;
        if permitted {
            next.cta_count_today += 1;
        }
        (permitted, next)
    }

    pub fn apply_to_page(
        &self,
        page: &PageDoc,
        enrolled: &[Enrolled<'_>],
        u: &UserState,
        m: &CompiledMatcher,
        rate: &RateState,
        now: DateTime<Utc>,
    ) -> Result<(InterventionOutcome, RateState), EngineError> {
        if !page.surface.is_ranked_list() {
            return Err(EngineError::SurfaceUnsupported(page.surface));
        }
        page.check_ids().map_err(|e| match e {
            crate::page::PageError::DuplicateId(id) => EngineError::DuplicateElementId(id),
            crate::page::PageError::Parse(p) => EngineError::DuplicateElementId(p.to_string()),
        })?;
        let filter = Filtered::new(enrolled);
        let mut rate = rate.clone();
        let bucket = hour_bucket(now);
        let bottom = page.elements.iter().map(|e| e.rank).max().map_or(0, |r| r.saturating_add(1));
        let mut moved = 0u32;
        let mut actions = Vec::with_capacity(page.elements.len());
        let mut events = Vec::new();
        let mut hidden_count = 0;
        // Per campaign with removals: labels removed, in first-removal order.
        let mut removals: Vec<(&Campaign, Vec<String>)> = Vec::new();
        let mut touched_labels: Vec<String> = Vec::new();

        for e in &page.elements {
            let keep = ElementAction {
                element_id: e.id.clone(),
                action: PageAction::Keep,
                intervention: InterventionType::None,
                cause: None,
            };
            if classify_element(e) != Targetability::Commercial {
                actions.push(keep);
                continue;
            }
            let mut hits = element_hits(e, m);
            filter.retain(&mut hits, u);
            let Some(winner) = resolve_conflict(&hits, u) else {
                actions.push(keep);
                continue;
            };
            let Enrolled { campaign, level } = filter.by_id[winner.campaign_id.as_str()];
            let label = winner.target_label.as_str();
            let (action, applied) = match select_intervention(campaign, page.surface, level) {
                InterventionType::Filter => (PageAction::Remove, InterventionType::Filter),
                InterventionType::Rerank => {
                    let new_rank = bottom.saturating_add(moved);
                    moved += 1;
                    (PageAction::MoveToBottom { new_rank }, InterventionType::Rerank)
                }
                InterventionType::GrayOut => {
                    (PageAction::Overlay { message: gray_out_message(label, campaign) }, InterventionType::GrayOut)
                }
                InterventionType::CallToAction => {
                    let (permitted, next) = self.consume_cta(&rate, now);
                    rate = next;
                    if permitted {
                        (
                            PageAction::AnnotateCta {
                                prompt: cta_prompt(label, campaign),
                                mailto: cta_mailto(label, campaign),
                            },
                            InterventionType::CallToAction,
                        )
                    } else {
                        (PageAction::Overlay { message: gray_out_message(label, campaign) }, InterventionType::GrayOut)
                    }
                }
                InterventionType::None | InterventionType::Block | InterventionType::Redirect => {
                    actions.push(ElementAction { cause: Some(winner.clone()), ..keep });
                    continue;
                }
            };
            if action == PageAction::Remove {
                hidden_count += 1;
                match removals.iter_mut().find(|(c, _)| c.id == campaign.id) {
                    Some((_, labels)) => push_distinct(labels, label),
                    None => removals.push((campaign, vec![label.to_owned()])),
                }
            }
            push_distinct(&mut touched_labels, label);
            events.push(EventRecord {
                campaign_id: campaign.id.clone(),
                surface: page.surface,
                intervention: applied,
                element_kind: EventTarget::Element(e.kind),
                count: 1,
                bucket_time: bucket,
            });
            actions.push(ElementAction {
                element_id: e.id.clone(),
                action,
                intervention: applied,
                cause: Some(winner.clone()),
            });
        }

        let mut cues: Vec<DisclosureCue> = removals
            .into_iter()
            .map(|(campaign, labels)| DisclosureCue {
                kind: CueKind::HiddenBanner,
                text: hidden_banner_text(campaign),
                related_targets: labels,
            })
            .collect();
        if hidden_count > 0 {
            cues.push(DisclosureCue {
                kind: CueKind::BadgeCount,
                text: hidden_count.to_string(),
                related_targets: Vec::new(),
            });
        }
        if !touched_labels.is_empty() {
            cues.push(DisclosureCue {
                kind: CueKind::WhitelistPrompt,
                text: touched_labels.iter().map(|l| format!("Whitelist {l}")).collect::<Vec<_>>().join(" | "),
                related_targets: touched_labels,
            });
        }
        Ok((InterventionOutcome { actions, cues, events, hidden_count }, rate))
    }

    /// Decides whether a top-level navigation to `url` proceeds. Interrupts
    /// are suppressed for a grace window per registrable domain after the
    /// previous one.
    pub fn check_navigation(
        &self,
        url: &str,
        enrolled: &[Enrolled<'_>],
        u: &UserState,
        m: &CompiledMatcher,
        rate: &RateState,
        now: DateTime<Utc>,
    ) -> Result<(NavigationOutcome, RateState), EngineError> {
        let allow = NavigationOutcome { decision: NavigationDecision::Allow, cause: None, event: None };
        let domain = normalize_domain(url)?;
        let mut hits = m.url_hits(url)?;
        let filter = Filtered::new(enrolled);
        filter.retain(&mut hits, u);
        if u.is_whitelisted(&domain) {
            hits.clear();
        }
        let Some(winner) = resolve_conflict(&hits, u) else {
            return Ok((allow, rate.clone()));
        };
        let Enrolled { campaign, level } = filter.by_id[winner.campaign_id.as_str()];
        let intervention = select_intervention(campaign, crate::campaign::Surface::Navigation, level);
        let decision = match intervention {
            InterventionType::Block => NavigationDecision::Block {
                campaign_id: campaign.id.clone(),
                message: format!(
                    "{domain} is blocked because of the {} campaign. {}",
                    campaign.name,
                    campaign.cta.render_prompt(&winner.target_label)
                ),
            },
            InterventionType::Redirect => NavigationDecision::Redirect {
                campaign_id: campaign.id.clone(),
                to: campaign.homepage_url.clone(),
            },
            _ => return Ok((allow, rate.clone())),
        };
        if let Some(last) = rate.last_interrupt.get(&domain) {
            if now - *last < self.config.grace_window {
                return Ok((allow, rate.clone()));
            }
        }
        let mut next = rate.clone();
        next.last_interrupt.insert(domain, now);
        let event = EventRecord {
            campaign_id: campaign.id.clone(),
            surface: Surface::Navigation,
            intervention,
            element_kind: EventTarget::Navigation,
            count: 1,
            bucket_time: hour_bucket(now),
        };
        Ok((NavigationOutcome { decision, cause: Some(winner.clone()), event: Some(event) }, next))
    }
}

/// Labels of all campaign targets the outcome acted on.
pub fn acted_targets(outcome: &InterventionOutcome) -> BTreeSet<String> {
    outcome
        .actions
        .iter()
        .filter(|a| a.action != PageAction::Keep)
        .filter_map(|a| a.cause.as_ref().map(|c| c.target_label.clone()))
        .collect()
}
