//! Random inputs: hosts with known registrable domains, keyword-bearing texts,
//! valid campaigns with monotone policy maps, and pages.

use std::collections::{BTreeMap, BTreeSet};

use boycott_core::{
    CallToAction, Campaign, ElementKind, InterventionType, PageDoc, PageElement, ReviewStatus, StrengthLevel,
    Surface,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Public suffixes used to build hosts. Every entry is a listed public suffix,
/// so `label.suffix` is registrable by construction.
pub const SUFFIXES: &[&str] = &["com", "org", "net", "io", "de", "co.uk", "com.au", "github.io", "blogspot.com"];

const FILLER: &[&str] = &[
    "the", "best", "store", "near", "me", "deals", "open", "now", "reviews", "hours", "price", "buy", "new",
    "lip", "balm", "fresh", "fruit", "crafts", "outdoor", "helmet", "café", "naïve", "Ünïcode", "straße",
];

const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", ". ", " - ", "/", "(", ")", " | ", "\n", "", "_", "'s "];

pub fn label<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..=7);
    (0..n).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

pub fn registrable<R: Rng>(rng: &mut R) -> String {
    format!("{}.{}", label(rng), SUFFIXES.choose(rng).unwrap())
}

/// A URL together with the registrable domain it was built around.
#[derive(Debug, Clone)]
pub struct GenUrl {
    pub url: String,
    pub registrable: String,
}

pub fn url_for<R: Rng>(rng: &mut R, registrable: &str) -> GenUrl {
    let mut host = String::new();
    for _ in 0..rng.gen_range(0..=2) {
        let sub = if rng.gen_bool(0.3) { "www".to_string() } else { label(rng) };
        host.push_str(&sub);
        host.push('.');
    }
    host.push_str(registrable);
    if rng.gen_bool(0.2) {
        host = host.to_ascii_uppercase();
    }
    let mut url = match rng.gen_range(0..4) {
        0 => format!("http://{host}"),
        1 => format!("https://{host}"),
        2 => format!("//{host}"),
        _ => host,
    };
    if rng.gen_bool(0.2) {
        url.push_str(&format!(":{}", rng.gen_range(1..65535)));
    }
    if rng.gen_bool(0.7) {
        url.push('/');
        url.push_str(&label(rng));
    }
    if rng.gen_bool(0.3) {
        url.push_str(&format!("?q={}&ref={}.com", label(rng), label(rng)));
    }
    if rng.gen_bool(0.2) {
        url.push_str("#top");
    }
    GenUrl { url, registrable: registrable.to_string() }
}

/// Targets that look like `registrable` but are different registrable
/// domains.
pub fn near_misses(registrable: &str) -> Vec<String> {
    let (first, rest) = registrable.split_once('.').unwrap();
    vec![
        format!("x{first}.{rest}"),
        format!("{first}x.{rest}"),
        format!("{first}.{rest}.evil.net"),
        format!("{rest}.{first}.com"),
    ]
}

pub fn keyword<R: Rng>(rng: &mut R) -> String {
    let words = rng.gen_range(1..=3);
    let mut out: Vec<String> = Vec::new();
    for _ in 0..words {
        let mut w = label(rng);
        if rng.gen_bool(0.5) {
            let mut c = w.chars();
            let head = c.next().unwrap().to_ascii_uppercase();
            w = std::iter::once(head).chain(c).collect();
        }
        if rng.gen_bool(0.1) {
            w.push('é');
        }
        out.push(w);
    }
    out.join(" ")
}

fn vary_case<R: Rng>(rng: &mut R, s: &str) -> String {
    match rng.gen_range(0..4) {
        0 => s.to_uppercase(),
        1 => s.to_lowercase(),
        2 => s.chars().map(|c| if rng.gen_bool(0.5) { c.to_uppercase().next().unwrap() } else { c }).collect(),
        _ => s.to_string(),
    }
}

/// A text mixing filler words, separators (sometimes none, to create glued
/// non-boundary occurrences) and case-varied keywords.
pub fn text_with<R: Rng>(rng: &mut R, keywords: &[String]) -> String {
    let mut out = String::new();
    for _ in 0..rng.gen_range(0..=14) {
        let piece = if !keywords.is_empty() && rng.gen_bool(0.35) {
            let kw = keywords.choose(rng).unwrap();
            vary_case(rng, kw)
        } else if rng.gen_bool(0.15) {
            label(rng)
        } else {
            FILLER.choose(rng).unwrap().to_string()
        };
        out.push_str(&piece);
        out.push_str(SEPARATORS.choose(rng).unwrap());
    }
    out
}

/// Random policy map that is permitted per surface and non-increasing in
/// invasiveness from High to Low.
pub fn monotone_policies<R: Rng>(rng: &mut R) -> BTreeMap<Surface, BTreeMap<StrengthLevel, InterventionType>> {
    Surface::ALL
        .into_iter()
        .map(|s| {
            let allowed: Vec<InterventionType> =
                InterventionType::ALL.into_iter().filter(|i| s.permits(*i)).collect();
            let mut picks: Vec<InterventionType> = (0..3).map(|_| *allowed.choose(rng).unwrap()).collect();
            picks.sort_by_key(|i| std::cmp::Reverse(i.invasiveness()));
            let row = [StrengthLevel::High, StrengthLevel::Medium, StrengthLevel::Low].into_iter().zip(picks).collect();
            (s, row)
        })
        .collect()
}

/// The same intervention on every surface and level where permitted, `none`
/// elsewhere.
pub fn uniform_policies(page: InterventionType) -> BTreeMap<Surface, BTreeMap<StrengthLevel, InterventionType>> {
    Surface::ALL
        .into_iter()
        .map(|s| {
            let i = if s.permits(page) { page } else { InterventionType::None };
            (s, StrengthLevel::ALL.into_iter().map(|l| (l, i)).collect())
        })
        .collect()
}

pub fn campaign(
    id: &str,
    keywords: impl IntoIterator<Item = String>,
    domains: impl IntoIterator<Item = String>,
    policies: BTreeMap<Surface, BTreeMap<StrengthLevel, InterventionType>>,
) -> Campaign {
    Campaign {
        id: id.to_string(),
        name: format!("Campaign {id}"),
        homepage_url: format!("https://{id}.example.org/"),
        keywords: keywords.into_iter().collect(),
        domains: domains.into_iter().collect(),
        cta: CallToAction {
            contact_email: format!("organizers@{id}.example.org"),
            prompt_text: "Write to {Company} and say why you are leaving.".into(),
            email_subject: "Your ties, {Company}".into(),
            email_body: "Dear {Company},\nI am boycotting you.".into(),
        },
        policies,
        category_tags: BTreeSet::from(["test".to_string()]),
        review_status: ReviewStatus::Approved,
    }
}

/// A valid campaign with random targets and a random monotone policy map.
pub fn random_campaign<R: Rng>(rng: &mut R, id: &str) -> Campaign {
    let keywords: BTreeSet<String> = (0..rng.gen_range(1..=5)).map(|_| keyword(rng)).collect();
    let domains: BTreeSet<String> = (0..rng.gen_range(0..=3)).map(|_| registrable(rng)).collect();
    let mut c = campaign(id, keywords, domains, monotone_policies(rng));
    c.name = format!("{} {}", keyword(rng), id);
    c.category_tags = (0..rng.gen_range(0..=3)).map(|_| label(rng)).collect();
    if rng.gen_bool(0.5) {
        c.cta.prompt_text = format!("{} {{Company}} {}", label(rng), label(rng));
    }
    c
}

const SERP_KINDS: &[ElementKind] = &[
    ElementKind::OrganicResult,
    ElementKind::Ad,
    ElementKind::KnowledgePanel,
    ElementKind::LocalMapEntry,
    ElementKind::TwitterLink,
    ElementKind::NewsCarouselItem,
    ElementKind::NewsArticle,
    ElementKind::WikipediaEntry,
    ElementKind::ThirdPartyCommercial,
    ElementKind::Other,
];

/// A page whose element texts and URLs draw on the given targets, so that a
/// good share of elements hit something.
pub fn random_page<R: Rng>(rng: &mut R, surface: Surface, keywords: &[String], domains: &[String]) -> PageDoc {
    let n = rng.gen_range(0..=16);
    let mut rank = 0u32;
    let elements = (0..n)
        .map(|i| {
            let kind = match surface {
                Surface::AmazonSearch if rng.gen_bool(0.8) => ElementKind::AmazonProductCard,
                _ => *SERP_KINDS.choose(rng).unwrap(),
            };
            let urls = (0..rng.gen_range(0..=2))
                .map(|_| {
                    let reg = if !domains.is_empty() && rng.gen_bool(0.4) {
                        domains.choose(rng).unwrap().clone()
                    } else {
                        registrable(rng)
                    };
                    url_for(rng, &reg).url
                })
                .collect();
            rank += rng.gen_range(1..=3);
            PageElement { id: format!("e{i}"), kind, text: text_with(rng, keywords), urls, rank }
        })
        .collect();
    PageDoc {
        surface,
        source_url: "https://www.example.com/search?q=x".into(),
        query: Some("x".into()),
        elements,
    }
}

/// `n` campaigns `c0..cn` sharing a pool of targets, so hits overlap across
/// campaigns.
pub fn campaign_set<R: Rng>(rng: &mut R, n: usize, policies: impl Fn(&mut R) -> BTreeMap<Surface, BTreeMap<StrengthLevel, InterventionType>>) -> (Vec<Campaign>, Vec<String>, Vec<String>) {
    let kw_pool: Vec<String> = (0..8).map(|_| keyword(rng)).collect::<BTreeSet<_>>().into_iter().collect();
    let dom_pool: Vec<String> = (0..5).map(|_| registrable(rng)).collect::<BTreeSet<_>>().into_iter().collect();
    let campaigns = (0..n)
        .map(|i| {
            let (nk, nd) = (rng.gen_range(1..=4), rng.gen_range(0..=3));
            let kws: Vec<String> = kw_pool.choose_multiple(rng, nk).cloned().collect();
            let doms: Vec<String> = dom_pool.choose_multiple(rng, nd).cloned().collect();
            let p = policies(rng);
            campaign(&format!("c{i}"), kws, doms, p)
        })
        .collect();
    (campaigns, kw_pool, dom_pool)
}
