//! Compiled keyword and domain matchers over a set of campaigns.
//!
//! Keywords match case-insensitively at token boundaries: the characters
//! immediately before and after an occurrence must not be word characters
//! (alphanumerics or `_`), so `giro` does not hit `girology`. Domains match at
//! registrable-domain granularity, which covers every subdomain.

use std::collections::{BTreeMap, BTreeSet};

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use serde::{Deserialize, Serialize};

use crate::campaign::Campaign;
use crate::domain::{normalize_domain, DomainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    Domain,
    Keyword,
}

/// A target of one campaign found in a text or URL.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetHit {
    pub campaign_id: String,
    /// The campaign's keyword or domain, exactly as written in the campaign.
    pub target_label: String,
    pub kind: HitKind,
    /// Byte offset of the first occurrence in the text for keyword hits; the
    /// index of the URL within its list for domain hits.
    pub position: usize,
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lowercases char by char and keeps a map from every byte of the folded
/// string back to the start of the original char it came from.
pub(crate) fn fold_case(text: &str) -> (String, Vec<usize>) {
    let mut folded = String::with_capacity(text.len());
    let mut origin = Vec::with_capacity(text.len() + 1);
    for (at, c) in text.char_indices() {
        for lc in c.to_lowercase() {
            let before = folded.len();
            folded.push(lc);
            origin.extend(std::iter::repeat_n(at, folded.len() - before));
        }
    }
    origin.push(text.len());
    (folded, origin)
}

pub(crate) fn fold_pattern(keyword: &str) -> String {
    fold_case(keyword).0
}

fn at_token_boundary(haystack: &str, start: usize, end: usize) -> bool {
    let before = haystack[..start].chars().next_back();
    let after = haystack[end..].chars().next();
    !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
}

type Owners = Vec<(String, String)>;

/// Immutable matcher built from a set of campaigns. Queries need no
/// synchronization; rebuild and swap to pick up campaign changes.
#[derive(Debug, Clone)]
pub struct CompiledMatcher {
    automaton: Option<AhoCorasick>,
    /// Folded pattern per automaton pattern id.
    patterns: Vec<String>,
    /// `(campaign_id, label)` owners per pattern id, sorted.
    keyword_owners: Vec<Owners>,
    domain_owners: BTreeMap<String, Owners>,
}

impl Default for CompiledMatcher {
    fn default() -> Self {
        Self::build(&[])
    }
}

impl CompiledMatcher {
    /// Compiles all keywords and domains of `campaigns`. Build time is linear
    /// in the total pattern length; output is independent of campaign order.
    pub fn build(campaigns: &[Campaign]) -> Self {
        let mut by_pattern: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        let mut by_domain: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for c in campaigns {
            for kw in &c.keywords {
                let folded = fold_pattern(kw);
                if folded.trim().is_empty() {
                    continue;
                }
                by_pattern.entry(folded).or_default().insert((c.id.clone(), kw.clone()));
            }
            for d in &c.domains {
                by_domain.entry(d.clone()).or_default().insert((c.id.clone(), d.clone()));
            }
        }
        let patterns: Vec<String> = by_pattern.keys().cloned().collect();
        let keyword_owners = by_pattern.into_values().map(|s| s.into_iter().collect()).collect();
        let automaton = (!patterns.is_empty()).then(|| {
            AhoCorasickBuilder::new()
                .match_kind(MatchKind::Standard)
                .build(&patterns)
                .expect("keyword automaton fits in memory")
        });
        CompiledMatcher {
            automaton,
            patterns,
            keyword_owners,
            domain_owners: by_domain.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty() && self.domain_owners.is_empty()
    }

    /// One hit per `(campaign, keyword)` occurring in `text`, ordered by first
    /// occurrence offset, then campaign id, then label.
    pub fn text_matches(&self, text: &str) -> Vec<TargetHit> {
        let Some(automaton) = &self.automaton else {
            return Vec::new();
        };
        let (folded, origin) = fold_case(text);
        let mut first_at: BTreeMap<usize, usize> = BTreeMap::new();
        for m in automaton.find_overlapping_iter(&folded) {
            let (start, end) = (m.start(), m.end());
            if !folded.is_char_boundary(start) || !folded.is_char_boundary(end) {
                continue;
            }
            if at_token_boundary(&folded, start, end) {
                first_at.entry(m.pattern().as_usize()).or_insert(start);
            }
        }
        let mut hits: Vec<TargetHit> = first_at
            .into_iter()
            .flat_map(|(pattern, start)| {
                let position = origin[start];
                self.keyword_owners[pattern].iter().map(move |(cid, label)| TargetHit {
                    campaign_id: cid.clone(),
                    target_label: label.clone(),
                    kind: HitKind::Keyword,
                    position,
                })
            })
            .collect();
        hits.sort_by(|a, b| {
            (a.position, &a.campaign_id, &a.target_label).cmp(&(b.position, &b.campaign_id, &b.target_label))
        });
        hits
    }

    /// Every campaign whose targeted domain equals the registrable domain of
    /// `url`, ordered by campaign id. `position` is left at 0.
    pub fn url_hits(&self, url: &str) -> Result<Vec<TargetHit>, DomainError> {
        let domain = normalize_domain(url)?;
        Ok(self
            .domain_owners
            .get(&domain)
            .into_iter()
            .flatten()
            .map(|(cid, label)| TargetHit {
                campaign_id: cid.clone(),
                target_label: label.clone(),
                kind: HitKind::Domain,
                position: 0,
            })
            .collect())
    }

    /// First domain hit for `url` (lowest campaign id), if any.
    pub fn url_matches(&self, url: &str) -> Result<Option<TargetHit>, DomainError> {
        Ok(self.url_hits(url)?.into_iter().next())
    }
}
