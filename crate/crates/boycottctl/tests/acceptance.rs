//! Acceptance runner. Every criterion runs, prints one PASS/FAIL line, and
//! the process exits non-zero if any failed. Built with `harness = false` so
//! the lines are always shown.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration as Elapsed, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use boycott_core::{
    build_share_message, Campaign, CompiledMatcher, CueKind, ElementKind, Engine, EventRecord, EventTarget,
    InterventionType, MetricsStore, PageAction, PageDoc, PageElement, RateState, StrengthLevel,
    Surface, UserState,
};
use boycott_registry::{router, Decision, Registry, RegistryConfig, ReviewDecision, Reviewer, Store};
use boycott_testkit::{checks, oracle};
use boycottctl::{default_kinds, load_campaign, load_graph, ReplayOptions, Replayer};
use chrono::{DateTime, Duration, TimeZone, Utc};
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tower::ServiceExt;
use uuid::Uuid;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn reference(name: &str) -> Campaign {
    load_campaign(&root().join("campaigns").join(format!("{name}.campaign.json"))).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Elapsed, started: Instant) -> Result<Elapsed, String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn hobby_lobby_replay() -> Outcome {
    let started = Instant::now();
    let path = root().join("fixtures/pages/hobby-lobby.serp.json");
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    let page = PageDoc::from_json(&bytes).map_err(|e| e.to_string())?;
    let kinds = |k: ElementKind| page.elements.iter().filter(|e| e.kind == k).count();
    ensure(
        kinds(ElementKind::LocalMapEntry) == 2
            && kinds(ElementKind::ThirdPartyCommercial) == 1
            && kinds(ElementKind::NewsArticle) == 1
            && kinds(ElementKind::WikipediaEntry) == 1
            && page.elements.len() == 10,
        || "fixture composition differs from the canonical page".into(),
    )?;

    let campaigns = vec![reference("grabyourwallet")];
    let user = UserState::fresh();
    let replayer = Replayer::new(&campaigns, &user, ReplayOptions::new(StrengthLevel::High));
    let report = replayer.run(&[("hobby-lobby.serp.json".into(), Ok(bytes))]);
    let f = &report.fixtures[0];
    ensure(f.error.is_none(), || format!("replay error {:?}", f.error))?;
    ensure(f.counts.removals == 8, || format!("{} removals", f.counts.removals))?;
    ensure(f.protected_touched.is_empty(), || format!("protected touched: {:?}", f.protected_touched))?;
    ensure(f.protected_untouched == ["news-1", "wiki-1"], || format!("protected confirmed: {:?}", f.protected_untouched))?;
    ensure(f.cues.contains(&CueKind::HiddenBanner), || "no hidden banner".into())?;
    ensure(f.hidden_count == 8, || format!("hidden_count {}", f.hidden_count))?;
    let commercial: BTreeSet<&str> = ["ad-1", "organic-1", "map-1", "map-2", "knowledge-1", "organic-2", "yelp-1", "organic-3"].into();
    let removed: BTreeSet<&str> = f.acted.iter().map(|a| a.element_id.as_str()).collect();
    ensure(removed == commercial, || format!("removed {removed:?}"))?;
    let took = within(Elapsed::from_secs(1), started)?;
    Ok(format!("8 removals, 0 protected touched, banner shown, hidden_count=8 ({took:.0?})"))
}

fn matcher_oracle() -> Outcome {
    let started = Instant::now();
    let text = checks::matcher_text(0xacce_0001, 1000)?;
    let urls = checks::matcher_urls(0xacce_0002, 500)?;
    let took = within(Elapsed::from_secs(10), started)?;
    Ok(format!("{text}; {urls} ({took:.1?})"))
}

fn rate_limit() -> Outcome {
    let mut runs = Vec::new();
    for seed in 0..10 {
        runs.push(checks::navigation_rate_limit(0xacce_0100 + seed, 250, 5 + seed as usize % 3)?);
    }
    Ok(format!("10 runs matched the timestamp oracle, e.g. {}", runs[0]))
}

fn whitelist_dominance() -> Outcome {
    let mut affected = 0;
    let mut n = 0;
    for seed in 0..120u64 {
        for surface in [Surface::GoogleSerp, Surface::AmazonSearch] {
            let level = StrengthLevel::ALL[seed as usize % 3];
            let detail = checks::whitelist_dominance(0xacce_0200 + seed, surface, level)?;
            n += 1;
            if !detail.ends_with(" 0 actions attributed to it") {
                affected += 1;
            }
        }
    }
    ensure(affected * 2 > n, || format!("only {affected}/{n} whitelisted targets had acted on the page"))?;
    Ok(format!("{n} randomized pages, {affected} whitelisting an acting target, exact difference in all"))
}

fn rerank_stability() -> Outcome {
    let mut moved_cases = 0;
    for seed in 0..200u64 {
        let detail = checks::rerank_stability(0xacce_0300 + seed)?;
        if !detail.ends_with(" 0 moved") {
            moved_cases += 1;
        }
    }
    ensure(moved_cases > 50, || format!("only {moved_cases} fixtures had moved cards"))?;
    Ok(format!("200 Amazon pages, {moved_cases} with moved cards, stable partition held"))
}

const METRIC_CAMPAIGNS: [&str; 2] = ["grabyourwallet", "stop-animal-testing"];

fn approved_registry() -> Registry {
    let mut config = RegistryConfig::default();
    config.reviewers.push(Reviewer { name: "acceptance".into(), token: "t".into() });
    let clock = Arc::new(|| Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap());
    let reg = Registry::with_clock(Store::memory(), config, clock);
    for id in METRIC_CAMPAIGNS {
        let doc = serde_json::to_value(reference(id)).unwrap();
        reg.submit_campaign(&doc).unwrap();
        let d = ReviewDecision { campaign_id: id.into(), decision: Decision::Approved, checklist: Default::default(), reviewer_note: String::new() };
        reg.review_campaign(id, &d, Some("t")).unwrap();
    }
    reg
}

fn random_event(rng: &mut StdRng, at: DateTime<Utc>) -> EventRecord {
    let (surface, intervention, element_kind) = [
        (Surface::Navigation, InterventionType::Redirect, EventTarget::Navigation),
        (Surface::AmazonSearch, InterventionType::Filter, EventTarget::Element(ElementKind::AmazonProductCard)),
        (Surface::AmazonSearch, InterventionType::GrayOut, EventTarget::Element(ElementKind::AmazonProductCard)),
        (Surface::GoogleSerp, InterventionType::Filter, EventTarget::Element(ElementKind::Ad)),
        (Surface::GoogleSerp, InterventionType::CallToAction, EventTarget::Element(ElementKind::OrganicResult)),
    ][rng.gen_range(0..5)];
    EventRecord {
        campaign_id: METRIC_CAMPAIGNS[rng.gen_range(0..2)].into(),
        surface,
        intervention,
        element_kind,
        count: rng.gen_range(1..3),
        bucket_time: boycott_core::metrics::hour_bucket(at),
    }
}

fn metrics_conservation() -> Outcome {
    let mut deliveries = 0;
    for seed in 0..25u64 {
        let mut rng = StdRng::seed_from_u64(0xacce_0400 + seed);
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let mut all_events = Vec::new();
        let mut installs_per_campaign: BTreeMap<String, BTreeSet<Uuid>> = BTreeMap::new();
        let mut batches = Vec::new();
        for i in 0..rng.gen_range(1..6) {
            let install = Uuid::from_u128(((seed as u128) << 32) + i);
            let mut store = MetricsStore::new(start);
            let mut now = start;
            for _ in 0..rng.gen_range(0..60) {
                now += Duration::minutes(rng.gen_range(1..500));
                let e = random_event(&mut rng, now);
                installs_per_campaign.entry(e.campaign_id.clone()).or_default().insert(install);
                all_events.push(e.clone());
                store.record(&[e]);
                if let Some(b) = store.flush(install, now, false) {
                    // The upload may be lost; a lost batch is not acknowledged.
                    if rng.gen_bool(0.6) {
                        store.acknowledge(&b);
                        batches.push(b);
                    }
                }
            }
            while let Some(b) = store.flush(install, now, true) {
                store.acknowledge(&b);
                batches.push(b);
                now += Duration::minutes(1);
            }
        }
        let fold = oracle::fold_counts(&all_events);
        for round in 0..4 {
            let mut order = batches.clone();
            for _ in 0..round * 3 {
                if let Some(b) = batches.choose(&mut rng) {
                    order.push(b.clone());
                }
            }
            order.shuffle(&mut rng);
            let reg = approved_registry();
            for b in &order {
                reg.ingest_batch(b).map_err(|e| e.to_string())?;
                deliveries += 1;
            }
            for id in METRIC_CAMPAIGNS {
                let s = reg.get_stats(id).map_err(|e| e.to_string())?;
                let got = (s.measured.visits_blocked, s.measured.results_altered, s.measured.products_hidden);
                let want = fold.get(id).copied().unwrap_or((0, 0, 0));
                ensure(got == want, || format!("seed {seed} round {round} {id}: server {got:?}, fold {want:?}"))?;
                let installs = installs_per_campaign.get(id).map_or(0, |s| s.len() as u64);
                ensure(s.measured.participants == installs, || {
                    format!("seed {seed} {id}: {} participants, {installs} distinct installs", s.measured.participants)
                })?;
            }
        }
    }
    Ok(format!("25 streams x 4 interleavings ({deliveries} deliveries incl. duplicates) equal the single-pass fold"))
}

fn share_message() -> Outcome {
    let msg = build_share_message(&reference("grabyourwallet"), 47, "http://bit.ly/2lkmxCq", "http://grabyourwallet.org");
    let want = "I boycotted 47 websites to support #GrabYourWallet using Out of Site (a Chrome extension). Join me now: http://bit.ly/2lkmxCq. Read about the campaign: http://grabyourwallet.org.";
    ensure(msg.as_bytes() == want.as_bytes(), || format!("got {msg:?}"))?;
    Ok(format!("{} bytes identical", want.len()))
}

async fn http(app: &axum::Router, method: Method, uri: &str, token: bool, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    if token {
        req = req.header("authorization", "Bearer gate");
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn review_body(id: &str, decision: &str, flags: [bool; 3]) -> Value {
    json!({
        "campaign_id": id,
        "decision": decision,
        "checklist": { "splc_hate_group": flags[0], "protected_class_targeting": flags[1], "state_actor": flags[2] },
        "reviewer_note": "acceptance"
    })
}

fn gatekeeping() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let mut config = RegistryConfig::default();
        config.reviewers.push(Reviewer { name: "gate".into(), token: "gate".into() });
        let app = router(Arc::new(Registry::new(Store::memory(), config)));
        let names = ["grabyourwallet", "stop-animal-testing", "vista-outdoors"];
        for n in names {
            let doc = serde_json::to_value(reference(n)).unwrap();
            let (st, _) = http(&app, Method::POST, "/v1/campaigns", false, Some(doc)).await;
            ensure(st == StatusCode::CREATED, || format!("submit {n}: {st}"))?;
        }
        let listed = |v: &Value| -> BTreeSet<String> {
            v["campaigns"].as_array().map_or_else(BTreeSet::new, |a| a.iter().filter_map(|c| c["id"].as_str().map(String::from)).collect())
        };
        let (_, v) = http(&app, Method::GET, "/v1/campaigns", false, None).await;
        ensure(listed(&v).is_empty(), || format!("submitted campaigns listed: {:?}", listed(&v)))?;

        let mut conflicts = 0;
        for bits in 1..8u8 {
            let flags = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
            let (st, body) = http(&app, Method::POST, "/v1/campaigns/vista-outdoors/review", true, Some(review_body("vista-outdoors", "approved", flags))).await;
            ensure(st == StatusCode::CONFLICT && body["error"] == "CHECKLIST_INCONSISTENT", || format!("flags {flags:?}: {st} {body}"))?;
            conflicts += 1;
        }
        let (st, _) = http(&app, Method::POST, "/v1/campaigns/grabyourwallet/review", true, Some(review_body("grabyourwallet", "approved", [false; 3]))).await;
        ensure(st == StatusCode::OK, || format!("approve: {st}"))?;
        let (st, _) = http(&app, Method::POST, "/v1/campaigns/stop-animal-testing/review", true, Some(review_body("stop-animal-testing", "rejected", [false, true, false]))).await;
        ensure(st == StatusCode::OK, || format!("reject: {st}"))?;

        let (_, v) = http(&app, Method::GET, "/v1/campaigns", false, None).await;
        ensure(listed(&v) == BTreeSet::from(["grabyourwallet".to_string()]), || format!("listed {:?}", listed(&v)))?;
        for n in ["stop-animal-testing", "vista-outdoors"] {
            let (st, _) = http(&app, Method::GET, &format!("/v1/campaigns/{n}"), false, None).await;
            ensure(st == StatusCode::NOT_FOUND, || format!("{n} served with {st}"))?;
        }
        Ok(format!("only the approved campaign served; {conflicts}/7 flagged approvals returned 409"))
    })
}

fn subsidiary_expansion() -> Outcome {
    let mut cyclic = 0;
    let mut biggest = 0;
    for seed in 0..100u64 {
        let (n, c) = common::check_expansion(0xacce_0500 + seed, 50)?;
        cyclic += c;
        biggest = biggest.max(n);
    }
    let g = load_graph(&root().join("fixtures/graphs/amazon.graph")).map_err(|e| e.to_string())?;
    let x = g.expand_targets(&["amazon".to_string()], &default_kinds()).map_err(|e| e.to_string())?;
    for d in ["goodreads.com", "imdb.com"] {
        ensure(x.domains.contains(d), || format!("Amazon expansion lacks {d}: {:?}", x.domains))?;
    }
    Ok(format!("100 random graphs (max {biggest} nodes, {cyclic} cyclic) equal reachability; Amazon -> goodreads.com, imdb.com"))
}

fn cta_page(n: usize) -> PageDoc {
    PageDoc {
        surface: Surface::GoogleSerp,
        source_url: "https://www.google.com/search?q=hobby+lobby".into(),
        query: Some("hobby lobby".into()),
        elements: (0..n)
            .map(|i| PageElement {
                id: format!("r{i}"),
                kind: ElementKind::OrganicResult,
                text: format!("Hobby Lobby result {i}"),
                urls: vec![format!("https://www.hobbylobby.com/p/{i}")],
                rank: i as u32 + 1,
            })
            .collect(),
    }
}

fn cta_budget() -> Outcome {
    let catalog = vec![reference("grabyourwallet")];
    let u = UserState::fresh().enroll(&catalog, "grabyourwallet", StrengthLevel::Medium).map_err(|e| e.to_string())?;
    let m = CompiledMatcher::build(&catalog);
    let engine = Engine::default();
    ensure(engine.config.cta_daily_cap == 10, || "default cap is not 10".into())?;
    let kinds = |page: &PageDoc, rate: &RateState, now: DateTime<Utc>| {
        let (out, next) = engine.apply_to_page(page, &u.enrolled(&catalog), &u, &m, rate, now).unwrap();
        let list: Vec<InterventionType> = out.actions.iter().map(|a| a.intervention).collect();
        let annotated = out.actions.iter().filter(|a| matches!(a.action, PageAction::AnnotateCta { .. })).count();
        (list, annotated, next)
    };
    let morning = Utc.with_ymd_and_hms(2019, 3, 4, 9, 0, 0).unwrap();
    let (first, annotated, rate) = kinds(&cta_page(11), &RateState::default(), morning);
    let mut want = vec![InterventionType::CallToAction; 10];
    want.push(InterventionType::GrayOut);
    ensure(first == want && annotated == 10, || format!("first page: {first:?}"))?;
    let (later, _, rate) = kinds(&cta_page(2), &rate, morning + Duration::hours(14) + Duration::minutes(59));
    ensure(later == vec![InterventionType::GrayOut; 2], || format!("same day, 23:59: {later:?}"))?;
    let (next_day, _, _) = kinds(&cta_page(2), &rate, Utc.with_ymd_and_hms(2019, 3, 5, 0, 0, 0).unwrap());
    ensure(next_day == vec![InterventionType::CallToAction; 2], || format!("after midnight UTC: {next_day:?}"))?;
    let oracle_run = checks::cta_budget(0xacce_0600, 500, 10)?;
    Ok(format!("11th same-day call to action grayed out, reset at 00:00 UTC; {oracle_run} matching the calendar oracle"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("hobby lobby replay", hobby_lobby_replay),
        ("matcher oracle", matcher_oracle),
        ("rate-limit property", rate_limit),
        ("whitelist dominance", whitelist_dominance),
        ("rerank stability", rerank_stability),
        ("metrics conservation + idempotence", metrics_conservation),
        ("share message bytes", share_message),
        ("gatekeeping soundness", gatekeeping),
        ("subsidiary expansion", subsidiary_expansion),
        ("CTA budget", cta_budget),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = started.elapsed();
        match result {
            Ok(detail) => println!("PASS  {name:<36} {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<36} {why} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
