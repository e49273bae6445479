//! URI-R canonicalization.
//!
//! Resources are compared by canonical URI string. Canonicalization removes
//! the fragment, lowercases scheme and host, and strips session-specific query
//! parameters so that `showad.js#PIX&kdntuid=1` and `showad.js` collapse to one
//! frontier entry.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Query keys stripped by default.
pub const DEFAULT_SESSION_KEYS: &[&str] = &["sessionid", "sid", "kdntuid", "s", "a", "it"];

/// Query-key patterns whose parameters are removed during canonicalization.
///
/// A pattern matches a key case-insensitively, either exactly or, when it ends
/// in `*`, as a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionPatterns(Vec<String>);

impl SessionPatterns {
    pub fn new<I, S>(patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            patterns
                .into_iter()
                .map(|p| p.as_ref().to_ascii_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        )
    }

    /// No stripping at all.
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn patterns(&self) -> &[String] {
        &self.0
    }

    pub fn matches(&self, key: &str) -> bool {
        self.0.iter().any(|pattern| match pattern.strip_suffix('*') {
            Some(prefix) => {
                key.len() >= prefix.len() && key[..prefix.len()].eq_ignore_ascii_case(prefix)
            }
            None => key.eq_ignore_ascii_case(pattern),
        })
    }
}

impl Default for SessionPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_SESSION_KEYS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UriError {
    Empty,
    MissingScheme(String),
    InvalidScheme(String),
    EmptyHost(String),
    InvalidCharacter { input: String, offset: usize },
}

impl fmt::Display for UriError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UriError::Empty => f.write_str("empty URI"),
            UriError::MissingScheme(input) => write!(f, "not an absolute URI (no scheme): {input:?}"),
            UriError::InvalidScheme(input) => write!(f, "invalid URI scheme in {input:?}"),
            UriError::EmptyHost(input) => write!(f, "URI has an empty host: {input:?}"),
            UriError::InvalidCharacter { input, offset } => {
                write!(f, "invalid character at byte {offset} in URI {input:?}")
            }
        }
    }
}

impl core::error::Error for UriError {}

/// An original-resource URI with its canonical form.
///
/// Equality, ordering and hashing use the canonical form only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "UriRepr", into = "UriRepr")]
pub struct UriR {
    raw: String,
    canonical: String,
}

#[derive(Serialize, Deserialize)]
struct UriRepr {
    raw: String,
    canonical: String,
}

impl TryFrom<UriRepr> for UriR {
    type Error = UriError;

    fn try_from(repr: UriRepr) -> Result<Self, Self::Error> {
        let parts = split(&repr.canonical)?;
        if parts.fragment.is_some() {
            return Err(UriError::InvalidCharacter {
                offset: repr.canonical.find('#').unwrap_or(0),
                input: repr.canonical,
            });
        }
        split(&repr.raw)?;
        Ok(UriR {
            raw: repr.raw,
            canonical: repr.canonical,
        })
    }
}

impl From<UriR> for UriRepr {
    fn from(uri: UriR) -> Self {
        UriRepr {
            raw: uri.raw,
            canonical: uri.canonical,
        }
    }
}

impl UriR {
    pub fn parse(raw: &str, patterns: &SessionPatterns) -> Result<Self, UriError> {
        canonicalize(raw, patterns)
    }

    /// Parses with the default session patterns.
    pub fn new(raw: &str) -> Result<Self, UriError> {
        canonicalize(raw, &SessionPatterns::default())
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }
}

impl PartialEq for UriR {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for UriR {}

impl PartialOrd for UriR {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UriR {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl Hash for UriR {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for UriR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

struct Parts<'a> {
    scheme: &'a str,
    authority: Option<&'a str>,
    path: &'a str,
    query: Option<&'a str>,
    fragment: Option<&'a str>,
}

fn split(raw: &str) -> Result<Parts<'_>, UriError> {
    if raw.is_empty() {
        return Err(UriError::Empty);
    }
    if let Some(offset) = raw
        .bytes()
        .position(|b| b.is_ascii_whitespace() || b.is_ascii_control())
    {
        return Err(UriError::InvalidCharacter {
            input: raw.to_string(),
            offset,
        });
    }
    let colon = raw
        .find(':')
        .ok_or_else(|| UriError::MissingScheme(raw.to_string()))?;
    let scheme = &raw[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err(UriError::InvalidScheme(raw.to_string())),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err(UriError::InvalidScheme(raw.to_string()));
    }

    let rest = &raw[colon + 1..];
    let (rest, fragment) = match rest.find('#') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (rest, query) = match rest.find('?') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (authority, path) = match rest.strip_prefix("//") {
        Some(hier) => {
            let end = hier.find('/').unwrap_or(hier.len());
            let authority = &hier[..end];
            let host = authority.rsplit('@').next().unwrap_or("");
            let host = match host.rfind(':') {
                Some(i) if !host.ends_with(']') => &host[..i],
                _ => host,
            };
            if host.is_empty() {
                return Err(UriError::EmptyHost(raw.to_string()));
            }
            (Some(authority), &hier[end..])
        }
        None => {
            if rest.is_empty() && query.is_none() {
                return Err(UriError::MissingScheme(raw.to_string()));
            }
            (None, rest)
        }
    };
    Ok(Parts {
        scheme,
        authority,
        path,
        query,
        fragment,
    })
}

/// Canonicalizes an absolute URI.
///
/// The fragment is dropped, scheme and host are lowercased, and query
/// parameters whose key matches `patterns` are removed. Remaining parameters
/// keep their order; an empty query loses its `?`.
pub fn canonicalize(raw: &str, patterns: &SessionPatterns) -> Result<UriR, UriError> {
    let parts = split(raw)?;
    let mut out = String::with_capacity(raw.len());
    out.push_str(&parts.scheme.to_ascii_lowercase());
    out.push(':');
    if let Some(authority) = parts.authority {
        out.push_str("//");
        match authority.rfind('@') {
            Some(at) => {
                out.push_str(&authority[..=at]);
                out.push_str(&authority[at + 1..].to_ascii_lowercase());
            }
            None => out.push_str(&authority.to_ascii_lowercase()),
        }
    }
    out.push_str(parts.path);
    if let Some(query) = parts.query {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|param| {
                let key = param.split('=').next().unwrap_or("");
                !patterns.matches(key)
            })
            .collect();
        // "?" alone and a query stripped to nothing both collapse.
        if !(kept.is_empty() || (kept.len() == 1 && kept[0].is_empty())) {
            out.push('?');
            out.push_str(&kept.join("&"));
        }
    }
    Ok(UriR {
        raw: raw.to_string(),
        canonical: out,
    })
}
