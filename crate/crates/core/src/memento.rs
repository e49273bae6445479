//! TimeMaps and archival coverage of a crawl frontier.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::datetime::DateTime;
use crate::resource::ResourceSet;
use crate::uri::UriR;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Memento {
    pub uri_m: String,
    pub datetime: DateTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeMap {
    pub original: UriR,
    pub mementos: Vec<Memento>,
    /// Memento links that were skipped, with the reason.
    pub warnings: Vec<String>,
}

impl TimeMap {
    pub fn memento_count(&self) -> u64 {
        self.mementos.len() as u64
    }

    pub fn to_link_format(&self) -> String {
        let mut out = format!("<{}>; rel=\"original\"", self.original.raw());
        for m in &self.mementos {
            out.push_str(&format!(
                ",\n<{}>; rel=\"memento\"; datetime=\"{}\"",
                m.uri_m,
                m.datetime.to_http_date()
            ));
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeMapError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for TimeMapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed link-format at byte {}: {}", self.offset, self.message)
    }
}

impl core::error::Error for TimeMapError {}

struct Link<'a> {
    target: &'a str,
    params: Vec<(&'a str, String)>,
}

impl Link<'_> {
    /// First occurrence wins, names compared case-insensitively.
    fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

fn is_token_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b"!#$%&'*+-.^_`|~".contains(&b)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> TimeMapError {
        TimeMapError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn quoted(&mut self) -> Result<String, TimeMapError> {
        let start = self.pos;
        self.pos += 1;
        let mut value = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let Some(c) = rest.chars().next() else {
                self.pos = start;
                return Err(self.error("unterminated quoted string"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(value),
                '\\' => match self.text[self.pos..].chars().next() {
                    Some(escaped) => {
                        self.pos += escaped.len_utf8();
                        value.push(escaped);
                    }
                    None => {
                        self.pos = start;
                        return Err(self.error("unterminated quoted string"));
                    }
                },
                c => value.push(c),
            }
        }
    }

    fn link(&mut self) -> Result<Link<'a>, TimeMapError> {
        if self.peek() != Some(b'<') {
            return Err(self.error("expected '<'"));
        }
        let open = self.pos;
        self.pos += 1;
        let target = self.take_while(|b| b != b'>' && b != b'<');
        if self.peek() != Some(b'>') {
            self.pos = open;
            return Err(self.error("unterminated link target"));
        }
        self.pos += 1;
        let mut params = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() != Some(b';') {
                break;
            }
            self.pos += 1;
            self.skip_ws();
            let name = self.take_while(is_token_char);
            if name.is_empty() {
                return Err(self.error("expected parameter name"));
            }
            self.skip_ws();
            let value = if self.peek() == Some(b'=') {
                self.pos += 1;
                self.skip_ws();
                if self.peek() == Some(b'"') {
                    self.quoted()?
                } else {
                    let v = self.take_while(is_token_char);
                    if v.is_empty() {
                        return Err(self.error("expected parameter value"));
                    }
                    v.to_string()
                }
            } else {
                String::new()
            };
            params.push((name, value));
        }
        Ok(Link { target, params })
    }
}

fn has_memento_rel(rel: &str) -> bool {
    rel.split_ascii_whitespace().any(|r| r.eq_ignore_ascii_case("memento"))
}

/// Parses a link-format TimeMap. Links whose `rel` includes `memento` become
/// entries; such links without a usable `datetime` are skipped with a warning.
pub fn parse_timemap(body: &str, original: UriR) -> Result<TimeMap, TimeMapError> {
    let mut cursor = Cursor { text: body, pos: 0 };
    let mut mementos = Vec::new();
    let mut warnings = Vec::new();
    loop {
        cursor.skip_ws();
        match cursor.peek() {
            None => break,
            Some(b',') => {
                cursor.pos += 1;
                continue;
            }
            Some(_) => {}
        }
        let start = cursor.pos;
        let link = cursor.link()?;
        cursor.skip_ws();
        match cursor.peek() {
            None | Some(b',') => {}
            Some(_) => return Err(cursor.error("expected ',' or ';'")),
        }
        if !link.param("rel").is_some_and(has_memento_rel) {
            continue;
        }
        if link.target.trim().is_empty() {
            warnings.push(format!("byte {start}: memento link with empty URI-M"));
            continue;
        }
        match link.param("datetime") {
            None => warnings.push(format!("byte {start}: memento <{}> has no datetime", link.target)),
            Some(text) => match DateTime::parse_http_date(text) {
                Ok(datetime) => mementos.push(Memento {
                    uri_m: link.target.to_string(),
                    datetime,
                }),
                Err(e) => warnings.push(format!("byte {start}: memento <{}>: {e}", link.target)),
            },
        }
    }
    Ok(TimeMap {
        original,
        mementos,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivalStatus {
    pub uri: UriR,
    pub archived: bool,
    pub memento_count: u64,
}

impl ArchivalStatus {
    pub fn new(uri: UriR, memento_count: u64) -> Self {
        Self {
            uri,
            archived: memento_count > 0,
            memento_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LookupError {
    Network(String),
    Status(u16),
    Parse(TimeMapError),
    Backend(String),
}

impl fmt::Display for LookupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LookupError::Network(e) => write!(f, "network error: {e}"),
            LookupError::Status(code) => write!(f, "unexpected HTTP status {code}"),
            LookupError::Parse(e) => write!(f, "{e}"),
            LookupError::Backend(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for LookupError {}

pub trait ArchiveBackend {
    /// Number of mementos held for exactly this canonical URI.
    fn lookup(&self, uri: &UriR) -> Result<u64, LookupError>;

    /// Looks up each URI; results are in input order.
    fn lookup_all(&self, uris: &[UriR]) -> Vec<Result<u64, LookupError>> {
        uris.iter().map(|u| self.lookup(u)).collect()
    }
}

impl<B: ArchiveBackend + ?Sized> ArchiveBackend for &B {
    fn lookup(&self, uri: &UriR) -> Result<u64, LookupError> {
        (**self).lookup(uri)
    }

    fn lookup_all(&self, uris: &[UriR]) -> Vec<Result<u64, LookupError>> {
        (**self).lookup_all(uris)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Holding {
    Mementos(u64),
    Failure(String),
}

/// In-process archive keyed by canonical URI. Unknown URIs have no mementos.
#[derive(Debug, Default)]
pub struct MockArchive {
    holdings: BTreeMap<String, Holding>,
    lookups: AtomicU64,
}

impl Clone for MockArchive {
    fn clone(&self) -> Self {
        Self {
            holdings: self.holdings.clone(),
            lookups: AtomicU64::new(self.lookups()),
        }
    }
}

impl MockArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, uri: &UriR, mementos: u64) {
        self.holdings
            .insert(uri.canonical().to_string(), Holding::Mementos(mementos));
    }

    pub fn insert_failure(&mut self, uri: &UriR, reason: impl Into<String>) {
        self.holdings
            .insert(uri.canonical().to_string(), Holding::Failure(reason.into()));
    }

    pub fn holdings(&self) -> &BTreeMap<String, Holding> {
        &self.holdings
    }

    pub fn len(&self) -> usize {
        self.holdings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holdings.is_empty()
    }

    /// Lookups served so far.
    pub fn lookups(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }
}

impl ArchiveBackend for MockArchive {
    fn lookup(&self, uri: &UriR) -> Result<u64, LookupError> {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        match self.holdings.get(uri.canonical()) {
            None => Ok(0),
            Some(Holding::Mementos(n)) => Ok(*n),
            Some(Holding::Failure(reason)) => Err(LookupError::Backend(reason.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCoverage {
    pub level: u32,
    pub resources: u64,
    pub archived: u64,
    pub unarchived: u64,
    pub failed: u64,
    /// `unarchived / (archived + unarchived)`; failures are excluded.
    pub fraction_unarchived: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnarchivedResource {
    pub level: u32,
    pub uri: String,
    pub mime: String,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub levels: Vec<LevelCoverage>,
    /// Per level, unarchived resources by MIME type (parameters stripped).
    pub mime_unarchived: BTreeMap<u32, BTreeMap<String, u64>>,
    /// Unarchived resources in level then URI order.
    pub unarchived: Vec<UnarchivedResource>,
    pub statuses: Vec<ArchivalStatus>,
    /// `(canonical URI, error)` for failed lookups.
    pub failures: Vec<(String, String)>,
    pub errors: u64,
    /// Distinct URIs sent to the backend.
    pub lookups: u64,
}

impl CoverageReport {
    pub fn fraction(&self, level: u32) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| l.fraction_unarchived)
    }
}

pub fn mime_essence(mime: &str) -> String {
    let essence = mime.split(';').next().unwrap_or("").trim();
    if essence.is_empty() {
        "unknown".to_string()
    } else {
        essence.to_ascii_lowercase()
    }
}

/// Looks up every distinct canonical URI of the frontier once and reports
/// per-level unarchived fractions.
pub fn coverage<B: ArchiveBackend>(frontier: &BTreeMap<u32, ResourceSet>, backend: &B) -> CoverageReport {
    let mut distinct: BTreeMap<&str, &UriR> = BTreeMap::new();
    for set in frontier.values() {
        for r in set {
            distinct.entry(r.key()).or_insert(&r.uri);
        }
    }
    let uris: Vec<UriR> = distinct.values().map(|u| (*u).clone()).collect();
    let results = backend.lookup_all(&uris);
    let outcome: BTreeMap<&str, &Result<u64, LookupError>> =
        distinct.keys().copied().zip(results.iter()).collect();

    let mut statuses = Vec::new();
    let mut failures = Vec::new();
    for (uri, result) in uris.iter().zip(&results) {
        match result {
            Ok(n) => statuses.push(ArchivalStatus::new(uri.clone(), *n)),
            Err(e) => failures.push((uri.canonical().to_string(), e.to_string())),
        }
    }

    let mut levels = Vec::new();
    let mut mime_unarchived: BTreeMap<u32, BTreeMap<String, u64>> = BTreeMap::new();
    let mut unarchived = Vec::new();
    for (&level, set) in frontier {
        let mut row = LevelCoverage {
            level,
            resources: set.len() as u64,
            archived: 0,
            unarchived: 0,
            failed: 0,
            fraction_unarchived: 0.0,
        };
        let histogram = mime_unarchived.entry(level).or_default();
        for r in set {
            match outcome[r.key()] {
                Ok(0) => {
                    row.unarchived += 1;
                    *histogram.entry(mime_essence(&r.mime)).or_insert(0) += 1;
                    unarchived.push(UnarchivedResource {
                        level,
                        uri: r.key().to_string(),
                        mime: r.mime.clone(),
                        size_bytes: r.size_bytes,
                    });
                }
                Ok(_) => row.archived += 1,
                Err(_) => row.failed += 1,
            }
        }
        let looked_up = row.archived + row.unarchived;
        if looked_up > 0 {
            row.fraction_unarchived = row.unarchived as f64 / looked_up as f64;
        }
        levels.push(row);
    }

    CoverageReport {
        levels,
        mime_unarchived,
        unarchived,
        errors: failures.len() as u64,
        lookups: uris.len() as u64,
        statuses,
        failures,
    }
}
