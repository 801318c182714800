//! Ingestion is idempotent and order-insensitive, and converges to the
//! client-side totals once every install has delivered its final batch.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use boycott_core::{
    ElementKind, EventRecord, EventTarget, InterventionType, MetricsBatch, MetricsStore, Surface,
};
use boycott_registry::{Decision, Registry, ReviewDecision, Store};
use chrono::{DateTime, Duration, TimeZone, Utc};
use common::{config, reference, TOKEN};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use uuid::Uuid;

const CAMPAIGNS: [&str; 2] = ["grabyourwallet", "stop-animal-testing"];

fn approved_registry() -> Registry {
    let clock = Arc::new(|| Utc.with_ymd_and_hms(2018, 3, 1, 12, 0, 0).unwrap());
    let reg = Registry::with_clock(Store::memory(), config(), clock);
    for id in CAMPAIGNS {
        reg.submit_campaign(&reference(id)).unwrap();
        let decision = ReviewDecision {
            campaign_id: id.into(),
            decision: Decision::Approved,
            checklist: Default::default(),
            reviewer_note: String::new(),
        };
        reg.review_campaign(id, &decision, Some(TOKEN)).unwrap();
    }
    reg
}

fn random_event(rng: &mut StdRng, at: DateTime<Utc>) -> EventRecord {
    let (surface, intervention, element_kind) = match rng.gen_range(0..4) {
        0 => (Surface::Navigation, InterventionType::Block, EventTarget::Navigation),
        1 => (Surface::AmazonSearch, InterventionType::Filter, EventTarget::Element(ElementKind::AmazonProductCard)),
        2 => (Surface::AmazonSearch, InterventionType::Rerank, EventTarget::Element(ElementKind::AmazonProductCard)),
        _ => (Surface::GoogleSerp, InterventionType::Filter, EventTarget::Element(ElementKind::OrganicResult)),
    };
    EventRecord {
        campaign_id: CAMPAIGNS[rng.gen_range(0..CAMPAIGNS.len())].into(),
        surface,
        intervention,
        element_kind,
        count: rng.gen_range(1..4),
        bucket_time: boycott_core::metrics::hour_bucket(at),
    }
}

/// Totals recorded on the clients, per campaign: (blocked, altered, hidden).
type Truth = Vec<(u64, u64, u64)>;

/// Simulates installs recording events over a few days with a lossy uplink.
/// Returns every batch that reached the server (in delivery order) and the
/// totals recorded on the clients.
fn simulate(seed: u64, installs: usize, loss: f64) -> (Vec<MetricsBatch>, Truth, BTreeSet<Uuid>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2018, 3, 1, 0, 0, 0).unwrap();
    let mut delivered = Vec::new();
    let mut active = BTreeSet::new();
    let mut truth = vec![(0, 0, 0); CAMPAIGNS.len()];
    for i in 0..installs {
        let install = Uuid::from_u128(seed as u128 * 1000 + i as u128 + 1);
        let mut store = MetricsStore::new(start);
        let mut now = start;
        for _ in 0..rng.gen_range(0..40) {
            now += Duration::minutes(rng.gen_range(1..600));
            let e = random_event(&mut rng, now);
            let slot = &mut truth[CAMPAIGNS.iter().position(|c| *c == e.campaign_id).unwrap()];
            match boycott_core::metrics::counter_for(e.surface, e.intervention) {
                boycott_core::Counter::VisitsBlocked => slot.0 += e.count,
                boycott_core::Counter::ResultsAltered => slot.1 += e.count,
                boycott_core::Counter::ProductsHidden => slot.2 += e.count,
            }
            store.record(&[e]);
            active.insert(install);
            if let Some(batch) = store.flush(install, now, false) {
                if rng.gen_bool(1.0 - loss) {
                    delivered.push(batch.clone());
                    store.acknowledge(&batch);
                }
            }
        }
        // Final drain over a reliable link.
        while let Some(batch) = store.flush(install, now, true) {
            delivered.push(batch.clone());
            store.acknowledge(&batch);
            now += Duration::minutes(1);
        }
    }
    (delivered, truth, active)
}

fn observed(reg: &Registry) -> (Truth, Vec<u64>) {
    let stats: Vec<_> = CAMPAIGNS.iter().map(|c| reg.get_stats(c).unwrap()).collect();
    (
        stats.iter().map(|s| (s.measured.visits_blocked, s.measured.results_altered, s.measured.products_hidden)).collect(),
        stats.iter().map(|s| s.measured.participants).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossy_delivery_converges_to_client_totals(seed in any::<u32>(), installs in 1usize..6, loss in 0.0f64..0.7) {
        let (batches, truth, active) = simulate(seed as u64, installs, loss);
        let reg = approved_registry();
        for b in &batches {
            reg.ingest_batch(b).unwrap();
        }
        let (sums, participants) = observed(&reg);
        prop_assert_eq!(sums, truth);
        let distinct: BTreeSet<Uuid> = batches.iter().filter(|b| !b.events.is_empty()).map(|b| b.install_id).collect();
        prop_assert_eq!(distinct, active.clone());
        for p in participants {
            prop_assert!(p as usize <= active.len());
        }
    }

    #[test]
    fn ingestion_commutes_and_is_idempotent(seed in any::<u32>(), installs in 1usize..5, dupes in 0usize..10) {
        let (batches, _, _) = simulate(seed as u64, installs, 0.3);
        let reg = approved_registry();
        for b in &batches {
            reg.ingest_batch(b).unwrap();
        }
        let expected = observed(&reg);

        let mut rng = StdRng::seed_from_u64(seed as u64 ^ 0x5eed);
        let mut replay = batches.clone();
        for _ in 0..dupes.min(batches.len()) {
            replay.push(batches.choose(&mut rng).unwrap().clone());
        }
        replay.shuffle(&mut rng);
        let shuffled = approved_registry();
        for b in &replay {
            shuffled.ingest_batch(b).unwrap();
        }
        prop_assert_eq!(observed(&shuffled), expected.clone());

        // A second full delivery changes nothing.
        for b in &replay {
            let ack = shuffled.ingest_batch(b).unwrap();
            prop_assert_eq!(ack.accepted_events, 0);
        }
        prop_assert_eq!(observed(&shuffled), expected);
    }

    #[test]
    fn participants_are_distinct_installs(installs in 1usize..20, repeats in 1usize..4) {
        let reg = approved_registry();
        let now = Utc.with_ymd_and_hms(2018, 3, 2, 0, 0, 0).unwrap();
        for _ in 0..repeats {
            for i in 0..installs {
                let campaigns: Vec<String> = if i % 2 == 0 { vec![CAMPAIGNS[0].into()] } else { CAMPAIGNS.iter().map(|c| c.to_string()).collect() };
                reg.ingest_batch(&MetricsBatch::enrollment_ping(Uuid::from_u128(i as u128 + 1), campaigns, now)).unwrap();
            }
        }
        let (_, participants) = observed(&reg);
        prop_assert_eq!(participants, vec![installs as u64, (installs / 2) as u64]);
        prop_assert_eq!(reg.get_stats(CAMPAIGNS[0]).unwrap().participants, installs as u64 + 12);
    }
}
