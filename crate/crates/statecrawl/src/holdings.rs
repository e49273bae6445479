//! Holdings files for the mock archive.
//!
//! ```text
//! # canonical URI, then a memento count or `error` and a reason
//! http://example.com/a.js 3
//! http://example.com/b.png 0
//! http://example.com/c.css error timeout
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use statecrawl_core::memento::Holding;
use statecrawl_core::{MockArchive, SessionPatterns, UriR};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldingsError {
    pub line: usize,
    pub message: String,
}

pub fn parse_holdings(text: &str, patterns: &SessionPatterns) -> Result<MockArchive, HoldingsError> {
    let mut archive = MockArchive::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| HoldingsError { line: i + 1, message };
        let mut fields = line.splitn(3, char::is_whitespace);
        let uri_text = fields.next().unwrap_or_default();
        let uri = UriR::parse(uri_text, patterns).map_err(|e| err(e.to_string()))?;
        match fields.next().map(str::trim) {
            Some("error") => {
                let reason = fields.next().map(str::trim).unwrap_or("lookup failed");
                archive.insert_failure(&uri, reason);
            }
            Some(count) => {
                let n: u64 = count
                    .parse()
                    .map_err(|_| err(format!("memento count {count:?} is not a non-negative integer")))?;
                if fields.next().is_some_and(|rest| !rest.trim().is_empty()) {
                    return Err(err("trailing text after memento count".into()));
                }
                archive.insert(&uri, n);
            }
            None => return Err(err("missing memento count".into())),
        }
    }
    Ok(archive)
}

pub fn read_holdings(path: &Path, patterns: &SessionPatterns) -> Result<MockArchive> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_holdings(&text, patterns).map_err(|e| Error::Holdings {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    })
}

pub fn format_holdings(archive: &MockArchive) -> String {
    let mut out = String::new();
    for (uri, holding) in archive.holdings() {
        match holding {
            Holding::Mementos(n) => writeln!(out, "{uri} {n}"),
            Holding::Failure(reason) => writeln!(out, "{uri} error {reason}"),
        }
        .expect("writing to a String");
    }
    out
}
