//! Campaigns as declarative data.
//!
//! A [`Campaign`] carries its targets (keywords and registrable domains), the
//! intervention to use for every (surface, strength level) pair, and its
//! call-to-action. Campaign files are strict JSON: unknown fields are a parse
//! error, and [`serialize_campaign`] emits a canonical byte form (sorted keys,
//! no insignificant whitespace) so documents can be compared byte-for-byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::is_registrable_domain;

/// Placeholder substituted with the targeted company in call-to-action text.
pub const COMPANY_PLACEHOLDER: &str = "{Company}";

/// A category of page the engine understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    GoogleSerp,
    AmazonSearch,
    Navigation,
}

impl Surface {
    pub const ALL: [Surface; 3] = [Surface::GoogleSerp, Surface::AmazonSearch, Surface::Navigation];

    pub fn as_str(self) -> &'static str {
        match self {
            Surface::GoogleSerp => "google_serp",
            Surface::AmazonSearch => "amazon_search",
            Surface::Navigation => "navigation",
        }
    }

    /// Surfaces that present an ordered result list (and so support rerank).
    pub fn is_ranked_list(self) -> bool {
        matches!(self, Surface::GoogleSerp | Surface::AmazonSearch)
    }

    /// Whether `intervention` is meaningful on this surface.
    pub fn permits(self, intervention: InterventionType) -> bool {
        use InterventionType::*;
        match intervention {
            None => true,
            Block | Redirect => self == Surface::Navigation,
            Rerank => self.is_ranked_list(),
            Filter | GrayOut | CallToAction => self != Surface::Navigation,
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Surface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Surface::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown surface {s:?}"))
    }
}

/// User-selected intervention strength. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrengthLevel {
    Low,
    Medium,
    High,
}

impl StrengthLevel {
    pub const ALL: [StrengthLevel; 3] = [StrengthLevel::High, StrengthLevel::Medium, StrengthLevel::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            StrengthLevel::High => "High",
            StrengthLevel::Medium => "Medium",
            StrengthLevel::Low => "Low",
        }
    }
}

impl fmt::Display for StrengthLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrengthLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(StrengthLevel::High),
            "medium" => Ok(StrengthLevel::Medium),
            "low" => Ok(StrengthLevel::Low),
            _ => Err(format!("unknown strength level {s:?} (expected High, Medium or Low)")),
        }
    }
}

/// The action applied to targeted content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionType {
    Filter,
    Rerank,
    GrayOut,
    CallToAction,
    Block,
    Redirect,
    None,
}

impl InterventionType {
    pub const ALL: [InterventionType; 7] = [
        InterventionType::Filter,
        InterventionType::Rerank,
        InterventionType::GrayOut,
        InterventionType::CallToAction,
        InterventionType::Block,
        InterventionType::Redirect,
        InterventionType::None,
    ];

    /// Position in the invasiveness order
    /// `filter > block = redirect > rerank > gray_out > call_to_action > none`.
    pub fn invasiveness(self) -> u8 {
        match self {
            InterventionType::Filter => 6,
            InterventionType::Block | InterventionType::Redirect => 5,
            InterventionType::Rerank => 4,
            InterventionType::GrayOut => 3,
            InterventionType::CallToAction => 2,
            InterventionType::None => 1,
        }
    }

    /// `self` is at least as invasive as `other`.
    pub fn at_least_as_invasive_as(self, other: InterventionType) -> bool {
        self.invasiveness() >= other.invasiveness()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InterventionType::Filter => "filter",
            InterventionType::Rerank => "rerank",
            InterventionType::GrayOut => "gray_out",
            InterventionType::CallToAction => "call_to_action",
            InterventionType::Block => "block",
            InterventionType::Redirect => "redirect",
            InterventionType::None => "none",
        }
    }
}

impl fmt::Display for InterventionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterventionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InterventionType::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown intervention type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Submitted,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("INVALID_TRANSITION: {from:?} -> {to:?}")]
pub struct InvalidTransition {
    pub from: ReviewStatus,
    pub to: ReviewStatus,
}

impl ReviewStatus {
    /// Only `submitted → approved` and `submitted → rejected` are legal.
    pub fn transition(self, to: ReviewStatus) -> Result<ReviewStatus, InvalidTransition> {
        match (self, to) {
            (ReviewStatus::Submitted, ReviewStatus::Approved | ReviewStatus::Rejected) => Ok(to),
            _ => Err(InvalidTransition { from: self, to }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallToAction {
    pub contact_email: String,
    /// Contact guidance; must contain `{Company}` exactly once.
    pub prompt_text: String,
    pub email_subject: String,
    pub email_body: String,
}

impl CallToAction {
    pub fn render_prompt(&self, company: &str) -> String {
        self.prompt_text.replace(COMPANY_PLACEHOLDER, company)
    }
}

/// Intervention policy per surface and strength level.
pub type PolicyTable = BTreeMap<Surface, BTreeMap<StrengthLevel, InterventionType>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub id: String,
    pub name: String,
    pub homepage_url: String,
    pub keywords: BTreeSet<String>,
    pub domains: BTreeSet<String>,
    pub cta: CallToAction,
    pub policies: PolicyTable,
    pub category_tags: BTreeSet<String>,
    pub review_status: ReviewStatus,
}

impl Campaign {
    /// The intervention configured for `(surface, level)`. A missing entry,
    /// which validation rules out, reads as `none`.
    pub fn policy(&self, surface: Surface, level: StrengthLevel) -> InterventionType {
        self.policies
            .get(&surface)
            .and_then(|by_level| by_level.get(&level))
            .copied()
            .unwrap_or(InterventionType::None)
    }

    /// Campaign name with all whitespace removed, prefixed with `#`.
    pub fn hashtag(&self) -> String {
        let tag: String = self.name.chars().filter(|c| !c.is_whitespace()).collect();
        format!("#{tag}")
    }

    pub fn is_approved(&self) -> bool {
        self.review_status == ReviewStatus::Approved
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    InvalidJson,
    NotAnObject,
    UnknownField,
    MissingField,
    TypeMismatch,
    InvalidValue,
    EmptyId,
    InvalidId,
    EmptyName,
    InvalidUrl,
    TargetsEmpty,
    EmptyKeyword,
    InvalidDomain,
    DuplicateTarget,
    PolicyIncomplete,
    SurfaceMismatch,
    Monotonicity,
    CtaPlaceholder,
    InvalidEmail,
    EmptyTag,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::InvalidJson => "INVALID_JSON",
            IssueCode::NotAnObject => "NOT_AN_OBJECT",
            IssueCode::UnknownField => "UNKNOWN_FIELD",
            IssueCode::MissingField => "MISSING_FIELD",
            IssueCode::TypeMismatch => "TYPE_MISMATCH",
            IssueCode::InvalidValue => "INVALID_VALUE",
            IssueCode::EmptyId => "EMPTY_ID",
            IssueCode::InvalidId => "INVALID_ID",
            IssueCode::EmptyName => "EMPTY_NAME",
            IssueCode::InvalidUrl => "INVALID_URL",
            IssueCode::TargetsEmpty => "TARGETS_EMPTY",
            IssueCode::EmptyKeyword => "EMPTY_KEYWORD",
            IssueCode::InvalidDomain => "INVALID_DOMAIN",
            IssueCode::DuplicateTarget => "DUPLICATE_TARGET",
            IssueCode::PolicyIncomplete => "POLICY_INCOMPLETE",
            IssueCode::SurfaceMismatch => "SURFACE_MISMATCH",
            IssueCode::Monotonicity => "MONOTONICITY",
            IssueCode::CtaPlaceholder => "CTA_PLACEHOLDER",
            IssueCode::InvalidEmail => "INVALID_EMAIL",
            IssueCode::EmptyTag => "EMPTY_TAG",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub severity: Severity,
    /// JSON pointer to the offending value.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn error_codes(&self) -> Vec<IssueCode> {
        self.errors().map(|i| i.code).collect()
    }

    fn error(&mut self, code: IssueCode, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            code,
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, code: IssueCode, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            code,
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        });
    }
}

fn valid_id(id: &str) -> bool {
    id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn valid_email(addr: &str) -> bool {
    let mut parts = addr.split('@');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(local), Some(host), None) => {
            !local.is_empty()
                && host.contains('.')
                && !host.starts_with('.')
                && !host.ends_with('.')
                && !addr.chars().any(|c| c.is_whitespace() || c == '?' || c == '&')
        }
        _ => false,
    }
}

fn valid_homepage(raw: &str) -> bool {
    url::Url::parse(raw)
        .map(|u| matches!(u.scheme(), "http" | "https") && u.host().is_some())
        .unwrap_or(false)
}

/// Checks every invariant of a typed campaign. Pure and deterministic; an
/// empty report means the campaign is valid.
pub fn validate_campaign(c: &Campaign) -> ValidationReport {
    let mut report = ValidationReport::default();

    if c.id.is_empty() {
        report.error(IssueCode::EmptyId, "/id", "campaign id must not be empty");
    } else if !valid_id(&c.id) {
        report.error(
            IssueCode::InvalidId,
            "/id",
            format!("campaign id {:?} may only contain ASCII letters, digits, '-' and '_'", c.id),
        );
    }
    if c.name.trim().is_empty() {
        report.error(IssueCode::EmptyName, "/name", "campaign name must not be empty");
    }
    if !valid_homepage(&c.homepage_url) {
        report.error(
            IssueCode::InvalidUrl,
            "/homepage_url",
            format!("{:?} is not an absolute http(s) URL", c.homepage_url),
        );
    }

    if c.keywords.is_empty() && c.domains.is_empty() {
        report.error(IssueCode::TargetsEmpty, "/keywords", "campaign has no keywords and no domains");
    }
    let mut folded: BTreeMap<String, &str> = BTreeMap::new();
    for kw in &c.keywords {
        if kw.trim().is_empty() {
            report.error(IssueCode::EmptyKeyword, "/keywords", "keywords must not be blank");
            continue;
        }
        if let Some(prev) = folded.insert(kw.to_lowercase(), kw) {
            report.warning(
                IssueCode::DuplicateTarget,
                "/keywords",
                format!("keywords {prev:?} and {kw:?} match the same text"),
            );
        }
    }
    for d in &c.domains {
        if !is_registrable_domain(d) {
            report.error(
                IssueCode::InvalidDomain,
                "/domains",
                format!("{d:?} is not a lowercase registrable domain"),
            );
        }
    }

    for surface in Surface::ALL {
        let by_level = c.policies.get(&surface);
        for level in StrengthLevel::ALL {
            let path = format!("/policies/{surface}/{level}");
            match by_level.and_then(|m| m.get(&level)) {
                None => report.error(
                    IssueCode::PolicyIncomplete,
                    path,
                    format!("no intervention configured for {surface} at {level}"),
                ),
                Some(&t) if !surface.permits(t) => report.error(
                    IssueCode::SurfaceMismatch,
                    path,
                    format!("{t} cannot be applied on {surface}"),
                ),
                Some(_) => {}
            }
        }
        if let Some(by_level) = by_level {
            for (hi, lo) in [
                (StrengthLevel::High, StrengthLevel::Medium),
                (StrengthLevel::Medium, StrengthLevel::Low),
            ] {
                if let (Some(&a), Some(&b)) = (by_level.get(&hi), by_level.get(&lo)) {
                    if !a.at_least_as_invasive_as(b) {
                        report.error(
                            IssueCode::Monotonicity,
                            format!("/policies/{surface}"),
                            format!("{surface}: {hi}={a} is less invasive than {lo}={b}"),
                        );
                    }
                }
            }
        }
    }

    if c.cta.prompt_text.matches(COMPANY_PLACEHOLDER).count() != 1 {
        report.error(
            IssueCode::CtaPlaceholder,
            "/cta/prompt_text",
            "prompt_text must contain {Company} exactly once",
        );
    }
    if !valid_email(&c.cta.contact_email) {
        report.error(
            IssueCode::InvalidEmail,
            "/cta/contact_email",
            format!("{:?} is not an e-mail address", c.cta.contact_email),
        );
    }
    if c.category_tags.iter().any(|t| t.trim().is_empty()) {
        report.error(IssueCode::EmptyTag, "/category_tags", "category tags must not be blank");
    }

    report
}

const CAMPAIGN_FIELDS: [&str; 9] = [
    "id",
    "name",
    "homepage_url",
    "keywords",
    "domains",
    "cta",
    "policies",
    "category_tags",
    "review_status",
];
const CTA_FIELDS: [&str; 4] = ["contact_email", "prompt_text", "email_subject", "email_body"];

fn check_fields(
    report: &mut ValidationReport,
    obj: &serde_json::Map<String, Value>,
    base: &str,
    known: &[&str],
) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            report.error(IssueCode::UnknownField, format!("{base}/{key}"), format!("unknown field {key:?}"));
        }
    }
    for key in known {
        if !obj.contains_key(*key) {
            report.error(IssueCode::MissingField, format!("{base}/{key}"), format!("missing field {key:?}"));
        }
    }
}

fn check_string(report: &mut ValidationReport, v: Option<&Value>, path: &str) {
    if let Some(v) = v {
        if !v.is_string() {
            report.error(IssueCode::TypeMismatch, path, "expected a string");
        }
    }
}

fn check_string_set(report: &mut ValidationReport, v: Option<&Value>, path: &str) {
    let Some(v) = v else { return };
    let Some(items) = v.as_array() else {
        report.error(IssueCode::TypeMismatch, path, "expected an array of strings");
        return;
    };
    let mut seen = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        match item.as_str() {
            None => report.error(IssueCode::TypeMismatch, format!("{path}/{i}"), "expected a string"),
            Some(s) => {
                if !seen.insert(s) {
                    report.warning(IssueCode::DuplicateTarget, format!("{path}/{i}"), format!("{s:?} listed twice"));
                }
            }
        }
    }
}

/// Validates raw bytes: malformed JSON is reported as `INVALID_JSON` with its
/// byte offset, anything else goes through [`validate_value`].
pub fn validate_document(input: &[u8]) -> ValidationReport {
    match parse_strict::<Value>(input) {
        Ok(v) => validate_value(&v),
        Err(e) => {
            let mut report = ValidationReport::default();
            report.error(IssueCode::InvalidJson, "", e.to_string());
            report
        }
    }
}

/// Validates arbitrary JSON against the strict campaign schema and, when the
/// structure is sound, against every campaign invariant. Never panics.
pub fn validate_value(candidate: &Value) -> ValidationReport {
    let mut report = ValidationReport::default();
    let Some(obj) = candidate.as_object() else {
        report.error(IssueCode::NotAnObject, "", "campaign document must be a JSON object");
        return report;
    };
    check_fields(&mut report, obj, "", &CAMPAIGN_FIELDS);
    for key in ["id", "name", "homepage_url"] {
        check_string(&mut report, obj.get(key), &format!("/{key}"));
    }
    for key in ["keywords", "domains", "category_tags"] {
        check_string_set(&mut report, obj.get(key), &format!("/{key}"));
    }
    if let Some(status) = obj.get("review_status") {
        if serde_json::from_value::<ReviewStatus>(status.clone()).is_err() {
            report.error(
                IssueCode::InvalidValue,
                "/review_status",
                "review_status must be one of submitted, approved, rejected",
            );
        }
    }
    match obj.get("cta") {
        Some(Value::Object(cta)) => {
            check_fields(&mut report, cta, "/cta", &CTA_FIELDS);
            for key in CTA_FIELDS {
                check_string(&mut report, cta.get(key), &format!("/cta/{key}"));
            }
        }
        Some(_) => report.error(IssueCode::TypeMismatch, "/cta", "expected an object"),
        None => {}
    }
    match obj.get("policies") {
        Some(Value::Object(policies)) => {
            for (surface, levels) in policies {
                let path = format!("/policies/{surface}");
                if surface.parse::<Surface>().is_err() {
                    report.error(IssueCode::UnknownField, &path, format!("unknown surface {surface:?}"));
                    continue;
                }
                let Some(levels) = levels.as_object() else {
                    report.error(IssueCode::TypeMismatch, &path, "expected an object keyed by strength level");
                    continue;
                };
                for (level, intervention) in levels {
                    let path = format!("{path}/{level}");
                    if !StrengthLevel::ALL.iter().any(|l| l.as_str() == level) {
                        report.error(IssueCode::UnknownField, &path, format!("unknown strength level {level:?}"));
                        continue;
                    }
                    match intervention.as_str() {
                        None => report.error(IssueCode::TypeMismatch, &path, "expected an intervention name"),
                        Some(name) if name.parse::<InterventionType>().is_err() => {
                            report.error(IssueCode::InvalidValue, &path, format!("unknown intervention type {name:?}"))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Some(_) => report.error(IssueCode::TypeMismatch, "/policies", "expected an object"),
        None => {}
    }

    if report.is_valid() {
        match serde_json::from_value::<Campaign>(candidate.clone()) {
            Ok(campaign) => report.issues.extend(validate_campaign(&campaign).issues),
            Err(e) => report.error(IssueCode::InvalidValue, "", e.to_string()),
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Canonical encoding

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PARSE_ERROR at byte {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: String,
}

pub(crate) fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = if line == 1 {
        0
    } else {
        input
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == b'\n')
            .nth(line - 2)
            .map(|(i, _)| i + 1)
            .unwrap_or(input.len())
    };
    (line_start + column.saturating_sub(1)).min(input.len())
}

pub(crate) fn parse_strict<T: serde::de::DeserializeOwned>(input: &[u8]) -> Result<T, ParseError> {
    serde_json::from_slice(input).map_err(|e| ParseError {
        offset: byte_offset(input, e.line(), e.column()),
        reason: e.to_string(),
    })
}

/// Parses a campaign document. Unknown fields are rejected.
pub fn parse_campaign(input: &[u8]) -> Result<Campaign, ParseError> {
    parse_strict(input)
}

/// Canonical UTF-8 JSON: keys sorted, no insignificant whitespace.
pub fn serialize_campaign(c: &Campaign) -> Vec<u8> {
    canonical_json(c)
}

pub(crate) fn canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    // serde_json::Map is ordered by key, so going through Value sorts every
    // object in the document.
    let value = serde_json::to_value(value).expect("in-memory value serializes");
    serde_json::to_vec(&value).expect("Value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g3_campaign() -> Campaign {
        let mut policies = PolicyTable::new();
        let table = [
            (Surface::GoogleSerp, [InterventionType::Filter, InterventionType::CallToAction, InterventionType::CallToAction]),
            (Surface::AmazonSearch, [InterventionType::Filter, InterventionType::Rerank, InterventionType::GrayOut]),
            (Surface::Navigation, [InterventionType::Redirect, InterventionType::Block, InterventionType::None]),
        ];
        for (surface, [h, m, l]) in table {
            policies.insert(
                surface,
                BTreeMap::from([(StrengthLevel::High, h), (StrengthLevel::Medium, m), (StrengthLevel::Low, l)]),
            );
        }
        Campaign {
            id: "grabyourwallet".into(),
            name: "GrabYourWallet".into(),
            homepage_url: "https://grabyourwallet.org".into(),
            keywords: ["Calvin Klein", "Tommy Hilfiger"].map(String::from).into(),
            domains: ["tommy.com", "calvinklein.us"].map(String::from).into(),
            cta: CallToAction {
                contact_email: "pr@example.com".into(),
                prompt_text: "Please consider contacting {Company}.".into(),
                email_subject: "Your ties to the Trump family".into(),
                email_body: "Hello {Company},".into(),
            },
            policies,
            category_tags: ["political".to_string()].into(),
            review_status: ReviewStatus::Submitted,
        }
    }

    #[test]
    fn g3_fragment_is_valid() {
        let report = validate_campaign(&g3_campaign());
        assert!(report.is_empty(), "{report:?}");
    }

    #[test]
    fn empty_targets() {
        let mut c = g3_campaign();
        c.keywords.clear();
        c.domains.clear();
        assert_eq!(validate_campaign(&c).error_codes(), vec![IssueCode::TargetsEmpty]);
    }

    #[test]
    fn medium_filter_high_gray_out_is_not_monotone() {
        let mut c = g3_campaign();
        let serp = c.policies.get_mut(&Surface::GoogleSerp).unwrap();
        serp.insert(StrengthLevel::High, InterventionType::GrayOut);
        serp.insert(StrengthLevel::Medium, InterventionType::Filter);
        serp.insert(StrengthLevel::Low, InterventionType::None);
        assert_eq!(validate_campaign(&c).error_codes(), vec![IssueCode::Monotonicity]);
    }

    #[test]
    fn monotonicity_matches_the_order_table_exhaustively() {
        // Independent restatement of the order as a ranked list of tiers.
        let tiers: [&[InterventionType]; 6] = [
            &[InterventionType::Filter],
            &[InterventionType::Block, InterventionType::Redirect],
            &[InterventionType::Rerank],
            &[InterventionType::GrayOut],
            &[InterventionType::CallToAction],
            &[InterventionType::None],
        ];
        let tier = |t: InterventionType| tiers.iter().position(|tier| tier.contains(&t)).unwrap();
        for a in InterventionType::ALL {
            for b in InterventionType::ALL {
                assert_eq!(a.at_least_as_invasive_as(b), tier(a) <= tier(b), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn surface_permissions() {
        assert!(!Surface::GoogleSerp.permits(InterventionType::Block));
        assert!(!Surface::AmazonSearch.permits(InterventionType::Redirect));
        assert!(!Surface::Navigation.permits(InterventionType::Rerank));
        assert!(!Surface::Navigation.permits(InterventionType::Filter));
        assert!(Surface::Navigation.permits(InterventionType::Redirect));
        assert!(Surface::AmazonSearch.permits(InterventionType::Rerank));
    }

    #[test]
    fn missing_policy_entry() {
        let mut c = g3_campaign();
        c.policies.get_mut(&Surface::AmazonSearch).unwrap().remove(&StrengthLevel::Low);
        assert_eq!(validate_campaign(&c).error_codes(), vec![IssueCode::PolicyIncomplete]);
    }

    #[test]
    fn cta_placeholder_must_appear_once() {
        let mut c = g3_campaign();
        c.cta.prompt_text = "Contact them.".into();
        assert_eq!(validate_campaign(&c).error_codes(), vec![IssueCode::CtaPlaceholder]);
        c.cta.prompt_text = "{Company} {Company}".into();
        assert_eq!(validate_campaign(&c).error_codes(), vec![IssueCode::CtaPlaceholder]);
    }

    #[test]
    fn review_transitions() {
        use ReviewStatus::*;
        assert_eq!(Submitted.transition(Approved), Ok(Approved));
        assert_eq!(Submitted.transition(Rejected), Ok(Rejected));
        for from in [Approved, Rejected] {
            for to in [Submitted, Approved, Rejected] {
                assert!(from.transition(to).is_err());
            }
        }
        assert!(Submitted.transition(Submitted).is_err());
    }

    #[test]
    fn empty_document_is_a_parse_error() {
        let err = parse_campaign(b"").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(g3_campaign()).unwrap();
        v["sneaky"] = Value::Bool(true);
        let bytes = serde_json::to_vec(&v).unwrap();
        let err = parse_campaign(&bytes).unwrap_err();
        assert!(err.reason.contains("sneaky"), "{err}");
        assert_eq!(validate_value(&v).error_codes(), vec![IssueCode::UnknownField]);
    }

    #[test]
    fn parse_error_offset_points_into_the_document() {
        let input = b"{\n  \"id\": tru\n}";
        let err = parse_campaign(input).unwrap_err();
        assert!(err.offset > 2 && err.offset <= input.len(), "{err}");
    }

    #[test]
    fn value_validation_reports_structure() {
        assert_eq!(validate_value(&Value::Null).error_codes(), vec![IssueCode::NotAnObject]);
        let mut v = serde_json::to_value(g3_campaign()).unwrap();
        v.as_object_mut().unwrap().remove("policies");
        assert_eq!(validate_value(&v).error_codes(), vec![IssueCode::MissingField]);
        let mut v = serde_json::to_value(g3_campaign()).unwrap();
        v["policies"]["navigation"]["High"] = Value::String("teleport".into());
        assert_eq!(validate_value(&v).error_codes(), vec![IssueCode::InvalidValue]);
        let mut v = serde_json::to_value(g3_campaign()).unwrap();
        v["keywords"] = serde_json::json!(["a", 3]);
        assert_eq!(validate_value(&v).error_codes(), vec![IssueCode::TypeMismatch]);
    }

    #[test]
    fn hashtag_strips_whitespace() {
        let mut c = g3_campaign();
        assert_eq!(c.hashtag(), "#GrabYourWallet");
        c.name = "Stop Animal\tTesting ".into();
        assert_eq!(c.hashtag(), "#StopAnimalTesting");
    }
}
