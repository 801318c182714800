//! URL → registrable-domain normalization backed by a vendored public suffix
//! list snapshot (`data/public_suffix_list.dat`).

use std::sync::OnceLock;

use publicsuffix::{List, Psl};
use url::{Host, Url};

static SNAPSHOT: &str = include_str!("../data/public_suffix_list.dat");

fn suffix_list() -> &'static List {
    static LIST: OnceLock<List> = OnceLock::new();
    LIST.get_or_init(|| {
        SNAPSHOT
            .parse()
            .expect("vendored public suffix snapshot must parse")
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("NOT_A_URL: {0:?}")]
    NotAUrl(String),
}

/// Parsed host of a URL-ish string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ParsedHost {
    Name(String),
    Ip(String),
}

/// `mailto:x@y`, `javascript:...` and the like: a scheme without an
/// authority. `host:8080` is a host with a port, not a scheme.
fn has_opaque_scheme(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.starts_with(|c: char| c.is_ascii_digit())
}

pub(crate) fn parse_host(input: &str) -> Result<ParsedHost, DomainError> {
    let trimmed = input.trim();
    let err = || DomainError::NotAUrl(input.to_owned());
    if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
        return Err(err());
    }
    let candidate = if trimmed.contains("://") {
        trimmed.to_owned()
    } else if has_opaque_scheme(trimmed) {
        return Err(err());
    } else if let Some(rest) = trimmed.strip_prefix("//") {
        format!("http://{rest}")
    } else {
        format!("http://{trimmed}")
    };
    let url = Url::parse(&candidate).map_err(|_| err())?;
    match url.host() {
        Some(Host::Domain(d)) => {
            let d = d.trim_end_matches('.').to_ascii_lowercase();
            if d.is_empty() || d.split('.').any(str::is_empty) {
                return Err(err());
            }
            Ok(ParsedHost::Name(d))
        }
        Some(Host::Ipv4(ip)) => Ok(ParsedHost::Ip(ip.to_string())),
        Some(Host::Ipv6(ip)) => Ok(ParsedHost::Ip(format!("[{ip}]"))),
        None => Err(err()),
    }
}

/// Registrable domain (public suffix plus one label) of a lowercase host, or
/// `None` when the host is itself a public suffix.
pub fn registrable_domain(host: &str) -> Option<String> {
    let domain = suffix_list().domain(host.as_bytes())?;
    std::str::from_utf8(domain.as_bytes()).ok().map(str::to_owned)
}

/// Reduces a URL (or bare host) to its lowercase registrable domain.
///
/// Scheme, userinfo, port, path, query and fragment are discarded. IP hosts are
/// returned verbatim, as are hosts that have no registrable part (a bare
/// public suffix or a single-label name).
pub fn normalize_domain(url: &str) -> Result<String, DomainError> {
    match parse_host(url)? {
        ParsedHost::Ip(ip) => Ok(ip),
        ParsedHost::Name(host) => Ok(registrable_domain(&host).unwrap_or(host)),
    }
}

/// Lowercase host of a URL, without reducing it to the registrable domain.
pub fn host_of(url: &str) -> Result<String, DomainError> {
    match parse_host(url)? {
        ParsedHost::Ip(ip) | ParsedHost::Name(ip) => Ok(ip),
    }
}

/// True when `d` is already in canonical registrable-domain form: lowercase,
/// no scheme or path, and exactly one label above its public suffix.
pub fn is_registrable_domain(d: &str) -> bool {
    if d.is_empty() || d != d.to_ascii_lowercase() || d.contains(['/', ':', '@', '?', '#']) {
        return false;
    }
    match parse_host(d) {
        Ok(ParsedHost::Name(host)) => {
            host == d && registrable_domain(&host).as_deref() == Some(d)
        }
        _ => false,
    }
}
