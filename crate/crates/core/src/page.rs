//! Surface-typed page model and the targetability classifier.
//!
//! Only commercial elements are ever intervened on. News, Wikipedia and news
//! carousel content is protected; unrecognized page furniture (`other`) is
//! neutral and likewise left alone.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::campaign::{parse_strict, ParseError, Surface};
use crate::domain::{host_of, normalize_domain, DomainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    OrganicResult,
    Ad,
    KnowledgePanel,
    LocalMapEntry,
    TwitterLink,
    NewsCarouselItem,
    NewsArticle,
    WikipediaEntry,
    ThirdPartyCommercial,
    AmazonProductCard,
    Other,
}

impl ElementKind {
    pub const ALL: [ElementKind; 11] = [
        ElementKind::OrganicResult,
        ElementKind::Ad,
        ElementKind::KnowledgePanel,
        ElementKind::LocalMapEntry,
        ElementKind::TwitterLink,
        ElementKind::NewsCarouselItem,
        ElementKind::NewsArticle,
        ElementKind::WikipediaEntry,
        ElementKind::ThirdPartyCommercial,
        ElementKind::AmazonProductCard,
        ElementKind::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::OrganicResult => "organic_result",
            ElementKind::Ad => "ad",
            ElementKind::KnowledgePanel => "knowledge_panel",
            ElementKind::LocalMapEntry => "local_map_entry",
            ElementKind::TwitterLink => "twitter_link",
            ElementKind::NewsCarouselItem => "news_carousel_item",
            ElementKind::NewsArticle => "news_article",
            ElementKind::WikipediaEntry => "wikipedia_entry",
            ElementKind::ThirdPartyCommercial => "third_party_commercial",
            ElementKind::AmazonProductCard => "amazon_product_card",
            ElementKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targetability {
    /// Interventions permitted.
    Commercial,
    /// Never intervened.
    Protected,
    /// Never intervened.
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageElement {
    pub id: String,
    pub kind: ElementKind,
    pub text: String,
    #[serde(default)]
    pub urls: Vec<String>,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageDoc {
    pub surface: Surface,
    pub source_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub elements: Vec<PageElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PageError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("duplicate element id {0:?}")]
    DuplicateId(String),
}

impl PageDoc {
    /// Parses a page fixture (strict schema) and checks id uniqueness.
    pub fn from_json(input: &[u8]) -> Result<PageDoc, PageError> {
        let doc: PageDoc = parse_strict(input)?;
        doc.check_ids()?;
        Ok(doc)
    }

    pub fn check_ids(&self) -> Result<(), PageError> {
        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if !seen.insert(e.id.as_str()) {
                return Err(PageError::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }

    pub fn element(&self, id: &str) -> Option<&PageElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Elements classified protected, in page order.
    pub fn protected_elements(&self) -> impl Iterator<Item = &PageElement> {
        self.elements
            .iter()
            .filter(|e| classify_element(e) == Targetability::Protected)
    }
}

/// Pure function of the element kind.
pub fn classify_element(e: &PageElement) -> Targetability {
    classify_kind(e.kind)
}

pub fn classify_kind(kind: ElementKind) -> Targetability {
    use ElementKind::*;
    match kind {
        OrganicResult | Ad | KnowledgePanel | LocalMapEntry | TwitterLink | ThirdPartyCommercial
        | AmazonProductCard => Targetability::Commercial,
        NewsArticle | WikipediaEntry | NewsCarouselItem => Targetability::Protected,
        Other => Targetability::Neutral,
    }
}

/// Set of third-party commercial platforms (review sites, app stores, coupon
/// sites). Registrable-domain entries cover all subdomains; longer host
/// entries such as `play.google.com` cover only that host and below.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlatformList {
    entries: BTreeSet<String>,
}

static VENDORED_PLATFORMS: &str = include_str!("../data/commercial_platforms.txt");

impl PlatformList {
    /// The list shipped in `data/commercial_platforms.txt`.
    pub fn vendored() -> &'static PlatformList {
        static LIST: OnceLock<PlatformList> = OnceLock::new();
        LIST.get_or_init(|| PlatformList::parse(VENDORED_PLATFORMS))
    }

    /// One domain per line, `#` comments, blank lines ignored.
    pub fn parse(text: &str) -> PlatformList {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_ascii_lowercase)
            .collect()
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.entries.contains(domain)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<String> for PlatformList {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        PlatformList { entries: iter.into_iter().collect() }
    }
}

/// True iff `url` belongs to one of the listed commercial platforms. Ingest
/// adapters use this to assign `third_party_commercial`.
pub fn is_third_party_commercial(url: &str, platforms: &PlatformList) -> Result<bool, DomainError> {
    let registrable = normalize_domain(url)?;
    if platforms.contains(&registrable) {
        return Ok(true);
    }
    let host = host_of(url)?;
    let mut rest = host.as_str();
    while rest.len() > registrable.len() {
        if platforms.contains(rest) {
            return Ok(true);
        }
        match rest.split_once('.') {
            Some((_, tail)) => rest = tail,
            None => break,
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn element(kind: ElementKind) -> PageElement {
        PageElement { id: "e".into(), kind, text: String::new(), urls: vec![], rank: 0 }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_element(&element(ElementKind::NewsCarouselItem)), Targetability::Protected);
        assert_eq!(classify_element(&element(ElementKind::LocalMapEntry)), Targetability::Commercial);
        assert_eq!(classify_element(&element(ElementKind::Other)), Targetability::Neutral);
    }

    #[test]
    fn protected_set_is_exactly_news_and_wikipedia() {
        let protected: BTreeSet<_> = ElementKind::ALL
            .into_iter()
            .filter(|k| classify_kind(*k) == Targetability::Protected)
            .collect();
        assert_eq!(
            protected,
            BTreeSet::from([ElementKind::NewsArticle, ElementKind::WikipediaEntry, ElementKind::NewsCarouselItem])
        );
        let neutral: Vec<_> = ElementKind::ALL
            .into_iter()
            .filter(|k| classify_kind(*k) == Targetability::Neutral)
            .collect();
        assert_eq!(neutral, vec![ElementKind::Other]);
    }

    #[test]
    fn third_party_platforms() {
        let list = PlatformList::vendored();
        assert!(is_third_party_commercial("https://www.yelp.com/biz/hobby-lobby", list).unwrap());
        assert!(!is_third_party_commercial("https://en.wikipedia.org/wiki/Hobby_Lobby", list).unwrap());
        assert!(is_third_party_commercial("https://play.google.com/store/apps/details?id=x", list).unwrap());
        assert!(!is_third_party_commercial("https://www.google.com/search?q=x", list).unwrap());
        assert!(is_third_party_commercial("https://www.retailmenot.com/view/hobbylobby.com", list).unwrap());
        let empty = PlatformList::default();
        assert!(!is_third_party_commercial("https://www.yelp.com/", &empty).unwrap());
        assert!(is_third_party_commercial("::::", list).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = br#"{"surface":"google_serp","source_url":"https://www.google.com/search?q=x",
            "elements":[{"id":"a","kind":"ad","text":"","rank":0},{"id":"a","kind":"ad","text":"","rank":1}]}"#;
        assert_eq!(PageDoc::from_json(doc), Err(PageError::DuplicateId("a".into())));
    }

    #[test]
    fn unknown_element_kind_is_a_parse_error() {
        let doc = br#"{"surface":"google_serp","source_url":"u","elements":[{"id":"a","kind":"banner","text":"","rank":0}]}"#;
        assert!(matches!(PageDoc::from_json(doc), Err(PageError::Parse(_))));
    }
}
