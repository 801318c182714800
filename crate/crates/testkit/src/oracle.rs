//! Brute-force reference implementations. None of these share code with the
//! production paths they check.

use std::collections::{BTreeMap, BTreeSet};

use boycott_core::{Campaign, EventRecord, InterventionType, Surface};
use chrono::{DateTime, Utc};

/// `(campaign_id, label, byte offset in the original text)`.
pub type TextHit = (String, String, usize);

/// Lowercased chars, each tagged with the byte offset of the original char.
fn lowered(text: &str) -> Vec<(char, usize)> {
    let mut out = Vec::new();
    for (at, c) in text.char_indices() {
        for l in c.to_lowercase() {
            out.push((l, at));
        }
    }
    out
}

fn word(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

/// Scans every start position for every keyword of every campaign and keeps
/// the first boundary-respecting occurrence per `(campaign, keyword)`.
/// Ordered by offset, campaign id, label.
pub fn text_hits(text: &str, campaigns: &[Campaign]) -> Vec<TextHit> {
    let hay = lowered(text);
    let mut out = BTreeSet::new();
    for c in campaigns {
        for kw in &c.keywords {
            let needle: Vec<char> = lowered(kw).into_iter().map(|(c, _)| c).collect();
            if needle.iter().all(|c| c.is_whitespace()) {
                continue;
            }
            if needle.len() > hay.len() {
                continue;
            }
            for start in 0..=hay.len() - needle.len() {
                let end = start + needle.len();
                if hay[start..end].iter().map(|(c, _)| *c).ne(needle.iter().copied()) {
                    continue;
                }
                let before_ok = start == 0 || !word(hay[start - 1].0);
                let after_ok = end == hay.len() || !word(hay[end].0);
                if before_ok && after_ok {
                    out.insert((hay[start].1, c.id.clone(), kw.clone()));
                    break;
                }
            }
        }
    }
    out.into_iter().map(|(pos, id, kw)| (id, kw, pos)).collect()
}

/// Campaigns (with label) whose domain set contains `registrable`.
pub fn domain_hits(registrable: &str, campaigns: &[Campaign]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = campaigns
        .iter()
        .filter(|c| c.domains.contains(registrable))
        .map(|c| (c.id.clone(), registrable.to_string()))
        .collect();
    out.sort();
    out
}

/// Transitive closure from `roots` by fixpoint iteration over the edge list.
pub fn reachable(edges: &[(usize, usize)], roots: &[usize]) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = roots.iter().copied().collect();
    loop {
        let before = seen.len();
        for &(a, b) in edges {
            if seen.contains(&a) {
                seen.insert(b);
            }
        }
        if seen.len() == before {
            return seen;
        }
    }
}

/// For a schedule of `(time, domain, eligible)` visits in time order, whether
/// each is interrupted: eligible and no interrupted visit to the same domain
/// within the previous hour.
pub fn interrupts(schedule: &[(DateTime<Utc>, String, bool)]) -> Vec<bool> {
    let mut result: Vec<bool> = Vec::with_capacity(schedule.len());
    for (i, (t, d, eligible)) in schedule.iter().enumerate() {
        let blocked_by_earlier = (0..i).any(|j| {
            let (tj, dj, _) = &schedule[j];
            result[j] && dj == d && (t.timestamp() - tj.timestamp()) < 3600
        });
        result.push(*eligible && !blocked_by_earlier);
    }
    result
}

/// Whether each call-to-action request in time order is granted under a
/// daily cap that resets at UTC midnight.
pub fn cta_grants(times: &[DateTime<Utc>], cap: u32) -> Vec<bool> {
    let mut per_day: BTreeMap<i64, u32> = BTreeMap::new();
    times
        .iter()
        .map(|t| {
            let day = t.timestamp().div_euclid(86_400);
            let used = per_day.entry(day).or_insert(0);
            if *used < cap {
                *used += 1;
                true
            } else {
                false
            }
        })
        .collect()
}

/// `(visits_blocked, results_altered, products_hidden)` per campaign.
pub type Counts = (u64, u64, u64);

pub fn fold_counts<'e>(events: impl IntoIterator<Item = &'e EventRecord>) -> BTreeMap<String, Counts> {
    let mut out: BTreeMap<String, Counts> = BTreeMap::new();
    for e in events {
        let slot = out.entry(e.campaign_id.clone()).or_insert((0, 0, 0));
        if e.surface == Surface::Navigation {
            slot.0 += e.count;
        } else if e.surface == Surface::AmazonSearch && e.intervention == InterventionType::Filter {
            slot.2 += e.count;
        } else {
            slot.1 += e.count;
        }
    }
    out
}
