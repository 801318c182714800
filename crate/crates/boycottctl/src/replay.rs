//! Offline replay of page and navigation fixtures through the engine.
//!
//! The clock is simulated: fixture `i` (in sorted path order) starts at
//! [`EPOCH`] plus `i` steps, and navigation visits are offset from that
//! start. Nothing here reads the wall clock or touches the network, so two
//! runs over the same inputs produce byte-identical reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use boycott_core::{
    classify_element, Campaign, CompiledMatcher, CueKind, Engine, EngineConfig, Enrolled, NavigationDecision,
    PageAction, PageDoc, RateState, StrengthLevel, Surface, Targetability, UserState,
};
use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

pub const EPOCH: &str = "2019-01-01T00:00:00Z";

pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap()
}

/// A timed sequence of top-level navigations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationFixture {
    pub surface: Surface,
    pub visits: Vec<Visit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Visit {
    pub url: String,
    /// Seconds after the fixture's start time.
    pub offset_secs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixture {
    Page(PageDoc),
    Navigation(NavigationFixture),
}

/// Dispatches on the `surface` field: `navigation` files hold visits, every
/// other surface holds a page.
pub fn parse_fixture(bytes: &[u8]) -> Result<Fixture, String> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| format!("invalid JSON: {e}"))?;
    if value.get("surface").and_then(|s| s.as_str()) == Some(Surface::Navigation.as_str()) {
        let nav: NavigationFixture = serde_json::from_value(value).map_err(|e| format!("navigation fixture: {e}"))?;
        if nav.visits.windows(2).any(|w| w[0].offset_secs > w[1].offset_secs) {
            return Err("navigation fixture: visits must be in time order".into());
        }
        Ok(Fixture::Navigation(nav))
    } else {
        PageDoc::from_json(bytes).map(Fixture::Page).map_err(|e| format!("page fixture: {e}"))
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub level: StrengthLevel,
    /// Simulated time between the starts of consecutive fixtures.
    pub step: Duration,
    /// Carry rate-limit state from one fixture to the next instead of
    /// starting each from scratch.
    pub shared_state: bool,
    pub engine: EngineConfig,
}

impl ReplayOptions {
    pub fn new(level: StrengthLevel) -> ReplayOptions {
        ReplayOptions { level, step: Duration::hours(1), shared_state: false, engine: EngineConfig::default() }
    }
}

/// Counts of applied interventions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub by_intervention: BTreeMap<String, u64>,
    pub by_element_kind: BTreeMap<String, u64>,
    pub removals: u64,
    pub hidden: u64,
    pub interruptions: u64,
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        for (k, v) in &other.by_intervention {
            *self.by_intervention.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.by_element_kind {
            *self.by_element_kind.entry(k.clone()).or_default() += v;
        }
        self.removals += other.removals;
        self.hidden += other.hidden;
        self.interruptions += other.interruptions;
    }

    fn count(&mut self, intervention: &str, kind: &str) {
        *self.by_intervention.entry(intervention.into()).or_default() += 1;
        *self.by_element_kind.entry(kind.into()).or_default() += 1;
    }

    pub fn intervention(&self, name: &str) -> u64 {
        self.by_intervention.get(name).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActedElement {
    pub element_id: String,
    pub kind: String,
    pub intervention: String,
    pub campaign_id: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NavigationStep {
    pub offset_secs: u32,
    pub url: String,
    pub decision: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub campaign_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureReport {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<Surface>,
    pub started_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub counts: Tally,
    pub hidden_count: usize,
    pub cues: Vec<CueKind>,
    pub acted: Vec<ActedElement>,
    /// Protected elements confirmed unchanged in the rendered page.
    pub protected_untouched: Vec<String>,
    pub protected_touched: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub navigation: Vec<NavigationStep>,
}

impl FixtureReport {
    fn empty(file: String, started_at: DateTime<Utc>) -> FixtureReport {
        FixtureReport {
            file,
            surface: None,
            started_at,
            error: None,
            counts: Tally::default(),
            hidden_count: 0,
            cues: Vec::new(),
            acted: Vec::new(),
            protected_untouched: Vec::new(),
            protected_touched: Vec::new(),
            navigation: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub fixtures: usize,
    pub errors: usize,
    pub counts: Tally,
    pub protected_untouched: usize,
    pub protected_touched: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub epoch: DateTime<Utc>,
    pub level: StrengthLevel,
    pub step_secs: i64,
    pub shared_state: bool,
    pub campaigns: Vec<String>,
    pub fixtures: Vec<FixtureReport>,
    pub totals: Totals,
}

impl ReplayReport {
    /// No parse or engine errors and no protected element touched.
    pub fn passed(&self) -> bool {
        self.totals.errors == 0 && self.totals.protected_touched == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        const COLS: [&str; 6] = ["filter", "rerank", "gray_out", "call_to_action", "block", "redirect"];
        let width = self.fixtures.iter().map(|f| f.file.len()).max().unwrap_or(0).max(7);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}  {:<13}", "fixture", "surface");
        for c in COLS {
            let _ = write!(out, "  {c:>14}");
        }
        let _ = writeln!(out, "  {:>9}  {:>9}  status", "protected", "touched");
        let row = |out: &mut String, name: &str, surface: &str, t: &Tally, ok: usize, bad: usize, status: &str| {
            let _ = write!(out, "{name:<width$}  {surface:<13}");
            for c in COLS {
                let _ = write!(out, "  {:>14}", t.intervention(c));
            }
            let _ = writeln!(out, "  {ok:>9}  {bad:>9}  {status}");
        };
        for f in &self.fixtures {
            let surface = f.surface.map_or("-", Surface::as_str);
            let status = match &f.error {
                Some(e) => format!("error: {e}"),
                None if !f.protected_touched.is_empty() => "PROTECTED TOUCHED".into(),
                None => "ok".into(),
            };
            row(&mut out, &f.file, surface, &f.counts, f.protected_untouched.len(), f.protected_touched.len(), &status);
        }
        let t = &self.totals;
        let status = if self.passed() { "ok".to_string() } else { format!("{} errors", t.errors) };
        row(&mut out, "TOTAL", "", &t.counts, t.protected_untouched, t.protected_touched, &status);
        let _ = writeln!(
            out,
            "{} fixtures, {} removals, {} hidden, {} interruptions",
            t.fixtures, t.counts.removals, t.counts.hidden, t.counts.interruptions
        );
        out
    }
}

/// `*.json` files under `dir`, recursively, sorted by relative path.
pub fn collect_fixtures(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    out.sort_by_key(|p| relative_name(dir, p));
    Ok(out)
}

fn relative_name(dir: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(dir).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

pub struct Replayer<'a> {
    campaigns: &'a [Campaign],
    user: &'a UserState,
    matcher: CompiledMatcher,
    engine: Engine,
    opts: ReplayOptions,
}

impl<'a> Replayer<'a> {
    pub fn new(campaigns: &'a [Campaign], user: &'a UserState, opts: ReplayOptions) -> Replayer<'a> {
        Replayer { campaigns, user, matcher: CompiledMatcher::build(campaigns), engine: Engine::new(opts.engine), opts }
    }

    /// Every given campaign at the replay level, highest user priority first.
    /// Review status is ignored so drafts can be tried before submission.
    fn enrolled(&self) -> Vec<Enrolled<'a>> {
        let mut list: Vec<Enrolled<'a>> =
            self.campaigns.iter().map(|campaign| Enrolled { campaign, level: self.opts.level }).collect();
        list.sort_by(|a, b| {
            (self.user.priority_of(&a.campaign.id), &a.campaign.id).cmp(&(self.user.priority_of(&b.campaign.id), &b.campaign.id))
        });
        list
    }

    /// Replays named fixture contents in the given order. A file that could
    /// not be read is passed as `Err` and reported like a parse error.
    pub fn run(&self, files: &[(String, Result<Vec<u8>, String>)]) -> ReplayReport {
        let enrolled = self.enrolled();
        let mut rate = RateState::default();
        let mut fixtures = Vec::new();
        let mut totals = Totals::default();
        for (i, (name, bytes)) in files.iter().enumerate() {
            let start = epoch() + self.opts.step * i as i32;
            if !self.opts.shared_state {
                rate = RateState::default();
            }
            let mut report = FixtureReport::empty(name.clone(), start);
            let result = bytes.clone().and_then(|b| parse_fixture(&b)).and_then(|fixture| match fixture {
                Fixture::Page(page) => {
                    report.surface = Some(page.surface);
                    self.page(&page, &enrolled, &rate, start, &mut report)
                }
                Fixture::Navigation(nav) => {
                    report.surface = Some(nav.surface);
                    self.navigation(&nav, &enrolled, &rate, start, &mut report)
                }
            });
            match result {
                Ok(next) => rate = next,
                Err(e) => {
                    let keep = FixtureReport::empty(name.clone(), start);
                    report = FixtureReport { surface: report.surface, error: Some(e), ..keep };
                    totals.errors += 1;
                }
            }
            totals.fixtures += 1;
            totals.counts.add(&report.counts);
            totals.protected_untouched += report.protected_untouched.len();
            totals.protected_touched += report.protected_touched.len();
            fixtures.push(report);
        }
        ReplayReport {
            epoch: epoch(),
            level: self.opts.level,
            step_secs: self.opts.step.num_seconds(),
            shared_state: self.opts.shared_state,
            campaigns: enrolled.iter().map(|e| e.campaign.id.clone()).collect(),
            fixtures,
            totals,
        }
    }

    /// Reads every fixture under `dir` and replays them.
    pub fn run_dir(&self, dir: &Path) -> std::io::Result<ReplayReport> {
        let files: Vec<_> = collect_fixtures(dir)?
            .into_iter()
            .map(|p| (relative_name(dir, &p), std::fs::read(&p).map_err(|e| format!("read failed: {e}"))))
            .collect();
        Ok(self.run(&files))
    }

    fn page(
        &self,
        page: &PageDoc,
        enrolled: &[Enrolled<'_>],
        rate: &RateState,
        now: DateTime<Utc>,
        report: &mut FixtureReport,
    ) -> Result<RateState, String> {
        let (out, next) = self
            .engine
            .apply_to_page(page, enrolled, self.user, &self.matcher, rate, now)
            .map_err(|e| e.to_string())?;
        let rendered = out.render(page);
        for a in &out.actions {
            if a.action == PageAction::Keep {
                continue;
            }
            let e = page.element(&a.element_id).expect("actions follow page elements");
            let cause = a.cause.as_ref().expect("acted elements have a cause");
            report.counts.count(a.intervention.as_str(), e.kind.as_str());
            if a.action == PageAction::Remove {
                report.counts.removals += 1;
            }
            report.acted.push(ActedElement {
                element_id: e.id.clone(),
                kind: e.kind.as_str().into(),
                intervention: a.intervention.as_str().into(),
                campaign_id: cause.campaign_id.clone(),
                target: cause.target_label.clone(),
            });
        }
        for e in page.elements.iter().filter(|e| classify_element(e) == Targetability::Protected) {
            let kept = out.action_for(&e.id).is_some_and(|a| a.action == PageAction::Keep);
            let same = rendered.element(&e.id) == Some(e);
            if kept && same {
                report.protected_untouched.push(e.id.clone());
            } else {
                report.protected_touched.push(e.id.clone());
            }
        }
        report.counts.hidden = out.hidden_count as u64;
        report.hidden_count = out.hidden_count;
        report.cues = out.cues.iter().map(|c| c.kind).collect();
        Ok(next)
    }

    fn navigation(
        &self,
        nav: &NavigationFixture,
        enrolled: &[Enrolled<'_>],
        rate: &RateState,
        start: DateTime<Utc>,
        report: &mut FixtureReport,
    ) -> Result<RateState, String> {
        let mut rate = rate.clone();
        for v in &nav.visits {
            let now = start + Duration::seconds(v.offset_secs.into());
            let (out, next) = self
                .engine
                .check_navigation(&v.url, enrolled, self.user, &self.matcher, &rate, now)
                .map_err(|e| format!("{}: {e}", v.url))?;
            rate = next;
            let (decision, campaign_id) = match &out.decision {
                NavigationDecision::Allow => ("allow", None),
                NavigationDecision::Block { campaign_id, .. } => ("block", Some(campaign_id.clone())),
                NavigationDecision::Redirect { campaign_id, .. } => ("redirect", Some(campaign_id.clone())),
            };
            if campaign_id.is_some() {
                report.counts.count(decision, "navigation");
                report.counts.interruptions += 1;
            }
            report.navigation.push(NavigationStep { offset_secs: v.offset_secs, url: v.url.clone(), decision: decision.into(), campaign_id });
        }
        Ok(rate)
    }
}
