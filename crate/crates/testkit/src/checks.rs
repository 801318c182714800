//! Seeded end-to-end checks of production code against the oracles. Each
//! returns a short summary on success and a description of the first
//! mismatch on failure, so both the property tests and the acceptance runner
//! can drive them.

use std::collections::{BTreeMap, BTreeSet};

use boycott_core::{
    normalize_domain, Campaign, CompiledMatcher, Engine, EngineConfig, HitKind, InterventionOutcome,
    InterventionType, NavigationDecision, PageAction, PageDoc, RateState, StrengthLevel, Surface, UserState,
};
use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::{gen, oracle};

pub type Check = Result<String, String>;

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 4, 2, 9, 15, 0).unwrap()
}

/// Enrolls in every campaign at `level` with a random priority order.
pub fn enroll_all(catalog: &[Campaign], level: StrengthLevel, rng: &mut StdRng) -> UserState {
    let u = catalog
        .iter()
        .fold(UserState::fresh(), |u, c| u.enroll(catalog, &c.id, level).unwrap());
    let mut order: Vec<String> = catalog.iter().map(|c| c.id.clone()).collect();
    order.shuffle(rng);
    u.set_priorities(&order).unwrap()
}

pub fn run_page(engine: &Engine, page: &PageDoc, catalog: &[Campaign], u: &UserState, m: &CompiledMatcher) -> InterventionOutcome {
    engine
        .apply_to_page(page, &u.enrolled(catalog), u, m, &RateState::default(), t0())
        .unwrap()
        .0
}

/// Compiled keyword matching against the brute-force scan.
pub fn matcher_text(seed: u64, cases: usize) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut hit_cases = 0;
    for case in 0..cases {
        let n_campaigns = rng.gen_range(1..=4);
        let campaigns: Vec<_> = (0..n_campaigns)
            .map(|i| {
                let kws: Vec<String> = (0..rng.gen_range(1..=25)).map(|_| gen::keyword(&mut rng)).collect();
                gen::campaign(&format!("c{i}"), kws, Vec::<String>::new(), gen::uniform_policies(InterventionType::Filter))
            })
            .collect();
        let vocab: Vec<String> = campaigns.iter().flat_map(|c| c.keywords.iter().cloned()).collect();
        let text = gen::text_with(&mut rng, &vocab);
        let m = CompiledMatcher::build(&campaigns);
        let hits = m.text_matches(&text);
        if let Some(h) = hits.iter().find(|h| h.kind != HitKind::Keyword) {
            return Err(format!("case {case}: non-keyword hit {h:?} from text"));
        }
        let got: Vec<_> = hits.into_iter().map(|h| (h.campaign_id, h.target_label, h.position)).collect();
        let want = oracle::text_hits(&text, &campaigns);
        if got != want {
            return Err(format!("case {case}: text {text:?}: got {got:?}, want {want:?}"));
        }
        if !want.is_empty() {
            hit_cases += 1;
        }
    }
    if cases >= 100 && hit_cases * 10 < cases * 3 {
        return Err(format!("generator produced too few hits ({hit_cases}/{cases})"));
    }
    Ok(format!("{cases} text cases, {hit_cases} with hits, 0 mismatches"))
}

/// Compiled domain matching against registrable-domain set membership.
pub fn matcher_urls(seed: u64, cases: usize) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut hit_cases = 0;
    for case in 0..cases {
        let base = gen::registrable(&mut rng);
        let mut domains: Vec<String> = (0..rng.gen_range(0..=6)).map(|_| gen::registrable(&mut rng)).collect();
        domains.extend(gen::near_misses(&base).into_iter().filter(|_| rng.gen_bool(0.5)));
        if rng.gen_bool(0.5) {
            domains.push(base.clone());
        }
        let campaigns: Vec<_> = (0..3)
            .map(|i| {
                let mine: Vec<String> = domains.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
                gen::campaign(&format!("c{i}"), ["unused keyword".to_string()], mine, gen::uniform_policies(InterventionType::Filter))
            })
            .collect();
        let url = gen::url_for(&mut rng, &base);
        match normalize_domain(&url.url) {
            Ok(d) if d == url.registrable => {}
            other => return Err(format!("case {case}: {} normalized to {other:?}, want {}", url.url, url.registrable)),
        }
        let m = CompiledMatcher::build(&campaigns);
        let got: Vec<_> = m
            .url_hits(&url.url)
            .map_err(|e| format!("case {case}: {}: {e}", url.url))?
            .into_iter()
            .map(|h| (h.campaign_id, h.target_label))
            .collect();
        let want = oracle::domain_hits(&url.registrable, &campaigns);
        if got != want {
            return Err(format!("case {case}: {}: got {got:?}, want {want:?}", url.url));
        }
        let first = m.url_matches(&url.url).ok().flatten().map(|h| h.campaign_id);
        if first != want.first().map(|w| w.0.clone()) {
            return Err(format!("case {case}: {}: first match {first:?}", url.url));
        }
        if !want.is_empty() {
            hit_cases += 1;
        }
    }
    if cases >= 100 && hit_cases * 5 < cases {
        return Err(format!("generator produced too few hits ({hit_cases}/{cases})"));
    }
    Ok(format!("{cases} URL cases, {hit_cases} with hits, 0 mismatches"))
}

/// Random navigation schedule over `n_domains` domains, two thirds of them
/// targeted, checked against the timestamp oracle and the window rules.
pub fn navigation_rate_limit(seed: u64, visits: usize, n_domains: usize) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let hosts: Vec<String> = {
        let mut set = BTreeSet::new();
        while set.len() < n_domains {
            set.insert(gen::registrable(&mut rng));
        }
        let mut v: Vec<String> = set.into_iter().collect();
        v.shuffle(&mut rng);
        v
    };
    let targeted = (n_domains * 2).div_ceil(3);
    let half = targeted / 2;
    let redirect = gen::campaign("r", ["unused".to_string()], hosts[..half].to_vec(), gen::uniform_policies(InterventionType::Redirect));
    let block = gen::campaign("b", ["unused".to_string()], hosts[half..targeted].to_vec(), gen::uniform_policies(InterventionType::Block));
    let catalog = vec![redirect, block];
    let u = enroll_all(&catalog, StrengthLevel::High, &mut rng);
    let enrolled = u.enrolled(&catalog);
    let m = CompiledMatcher::build(&catalog);
    let engine = Engine::default();

    let mut now = t0();
    let mut schedule = Vec::new();
    let mut got = Vec::new();
    let mut rate = RateState::default();
    for _ in 0..visits {
        now += Duration::seconds(rng.gen_range(0..=40 * 60));
        let i = rng.gen_range(0..hosts.len());
        let url = gen::url_for(&mut rng, &hosts[i]).url;
        let (out, next) = engine
            .check_navigation(&url, &enrolled, &u, &m, &rate, now)
            .map_err(|e| format!("{url}: {e}"))?;
        rate = next;
        let interrupted = out.decision != NavigationDecision::Allow;
        if out.event.is_some() != interrupted {
            return Err(format!("{url}: event {:?} for decision {:?}", out.event, out.decision));
        }
        got.push(interrupted);
        schedule.push((now, hosts[i].clone(), i < targeted));
    }
    let want = oracle::interrupts(&schedule);
    if got != want {
        let at = got.iter().zip(&want).position(|(a, b)| a != b).unwrap();
        return Err(format!("seed {seed}: visit {at} ({:?}) got {}, want {}", schedule[at], got[at], want[at]));
    }

    let mut last: BTreeMap<&str, DateTime<Utc>> = BTreeMap::new();
    for (k, ((t, d, eligible), interrupted)) in schedule.iter().zip(&got).enumerate() {
        match last.get(d.as_str()) {
            Some(prev) if *t - *prev < Duration::minutes(60) => {
                if *interrupted {
                    return Err(format!("seed {seed}: visit {k} to {d} interrupted twice within an hour"));
                }
            }
            _ => {
                if interrupted != eligible {
                    return Err(format!("seed {seed}: visit {k} to {d} outside the window: interrupted={interrupted}"));
                }
            }
        }
        if *interrupted {
            last.insert(d, *t);
        }
    }
    let n = got.iter().filter(|x| **x).count();
    Ok(format!("{visits} visits over {n_domains} domains, {n} interruptions"))
}

/// Whitelisting one target changes exactly the actions and events it caused.
pub fn whitelist_dominance(seed: u64, surface: Surface, level: StrengthLevel) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let (catalog, keywords, domains) = gen::campaign_set(&mut rng, n, gen::monotone_policies);
    let page = gen::random_page(&mut rng, surface, &keywords, &domains);
    let user = enroll_all(&catalog, level, &mut rng);
    let m = CompiledMatcher::build(&catalog);
    // Big enough that call-to-action never degrades within one page.
    let engine = Engine::new(EngineConfig { cta_daily_cap: 1000, ..EngineConfig::default() });
    let before = run_page(&engine, &page, &catalog, &user, &m);

    // Mostly whitelist a target that acted on this page, so the check has
    // something to release; sometimes any target from the pool.
    let acting: Vec<String> = before
        .actions
        .iter()
        .filter(|a| a.action != PageAction::Keep)
        .filter_map(|a| a.cause.as_ref().map(|c| c.target_label.clone()))
        .collect();
    let pool: Vec<String> = keywords.iter().chain(&domains).cloned().collect();
    let t = if !acting.is_empty() && rng.gen_bool(0.8) { acting.choose(&mut rng) } else { pool.choose(&mut rng) }
        .unwrap()
        .clone();
    let after = run_page(&engine, &page, &catalog, &user.add_whitelist(&t), &m);
    let is_t = |label: &str| label.to_lowercase() == t.to_lowercase();

    let mut expected_events = Vec::new();
    let mut affected = 0;
    for (b, a) in before.actions.iter().zip(&after.actions) {
        let caused_by_t = b.cause.as_ref().is_some_and(|c| is_t(&c.target_label));
        if let Some(c) = &a.cause {
            if is_t(&c.target_label) {
                return Err(format!("{}: still attributed to whitelisted {t:?}", a.element_id));
            }
        }
        if caused_by_t {
            if b.action != PageAction::Keep {
                affected += 1;
            }
        } else {
            let same_action = matches!(
                (&b.action, &a.action),
                (PageAction::MoveToBottom { .. }, PageAction::MoveToBottom { .. })
            ) || b.action == a.action;
            if b.cause != a.cause || b.intervention != a.intervention || !same_action {
                return Err(format!("{}: changed although not caused by {t:?}: {b:?} -> {a:?}", a.element_id));
            }
        }
        if a.action != PageAction::Keep {
            expected_events.push((a.cause.clone().unwrap().campaign_id, a.intervention));
        }
    }
    let got_events: Vec<_> = after.events.iter().map(|e| (e.campaign_id.clone(), e.intervention)).collect();
    if got_events != expected_events {
        return Err(format!("events {got_events:?}, want {expected_events:?}"));
    }
    Ok(format!("whitelisted {t:?}, {affected} actions attributed to it"))
}

/// Rerank moves targeted cards after untargeted ones, preserving the relative
/// order within both groups.
pub fn rerank_stability(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let (catalog, keywords, domains) = gen::campaign_set(&mut rng, 2, |_| gen::uniform_policies(InterventionType::Rerank));
    let page = gen::random_page(&mut rng, Surface::AmazonSearch, &keywords, &domains);
    let u = enroll_all(&catalog, StrengthLevel::Medium, &mut rng);
    let m = CompiledMatcher::build(&catalog);
    let out = run_page(&Engine::default(), &page, &catalog, &u, &m);
    let moved: BTreeSet<&str> = out
        .actions
        .iter()
        .filter(|a| matches!(a.action, PageAction::MoveToBottom { .. }))
        .map(|a| a.element_id.as_str())
        .collect();
    let rendered = out.render(&page);
    let ids = |doc: &PageDoc, targeted: bool| -> Vec<String> {
        doc.elements.iter().filter(|e| moved.contains(e.id.as_str()) == targeted).map(|e| e.id.clone()).collect()
    };
    for targeted in [false, true] {
        if ids(&page, targeted) != ids(&rendered, targeted) {
            return Err(format!("relative order changed (targeted={targeted}): {:?} -> {:?}", ids(&page, targeted), ids(&rendered, targeted)));
        }
    }
    let order: Vec<bool> = rendered.elements.iter().map(|e| moved.contains(e.id.as_str())).collect();
    if order.windows(2).any(|w| w[0] && !w[1]) {
        return Err(format!("targeted card before untargeted one: {order:?}"));
    }
    let ranks: Vec<u32> = rendered.elements.iter().map(|e| e.rank).collect();
    if !ranks.windows(2).all(|w| w[0] < w[1]) {
        return Err(format!("ranks not increasing: {ranks:?}"));
    }
    Ok(format!("{} cards, {} moved", page.elements.len(), moved.len()))
}

/// Daily call-to-action budget against the UTC calendar oracle.
pub fn cta_budget(seed: u64, calls: usize, cap: u32) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let engine = Engine::new(EngineConfig { cta_daily_cap: cap, ..EngineConfig::default() });
    let mut now = Utc.with_ymd_and_hms(2018, 5, 1, 20, 0, 0).unwrap();
    let mut times = Vec::new();
    let mut got = Vec::new();
    let mut rate = RateState::default();
    for _ in 0..calls {
        now += Duration::seconds(rng.gen_range(0..=3 * 3600));
        let (ok, next) = engine.consume_cta(&rate, now);
        if next.cta_count_today > cap {
            return Err(format!("count {} above cap {cap}", next.cta_count_today));
        }
        rate = next;
        times.push(now);
        got.push(ok);
    }
    let want = oracle::cta_grants(&times, cap);
    if got != want {
        let at = got.iter().zip(&want).position(|(a, b)| a != b).unwrap();
        return Err(format!("call {at} at {}: granted={}, want {}", times[at], got[at], want[at]));
    }
    let denied = got.iter().filter(|g| !**g).count();
    Ok(format!("{calls} calls, {denied} over budget"))
}
