//! Fixture files (one JSON document per seed) and seed lists.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use statecrawl_core::SiteFixture;

use crate::error::{Error, Result};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory serialization");
    text.push('\n');
    text
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_fixture(text: &str) -> serde_json::Result<SiteFixture> {
    serde_json::from_str(text)
}

pub fn read_fixture(path: &Path) -> Result<SiteFixture> {
    read_json(path)
}

pub fn write_fixture(path: &Path, fixture: &SiteFixture) -> Result<()> {
    write_json(path, fixture)
}

/// `0000.json`, `0001.json`, ...
pub fn fixture_file_name(index: usize) -> String {
    format!("{index:04}.json")
}

pub fn write_fixture_dir(dir: &Path, fixtures: &[SiteFixture]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    fixtures
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(fixture_file_name(i));
            write_fixture(&path, f)?;
            Ok(path)
        })
        .collect()
}

/// Every `*.json` file in `dir` except `manifest-*.json`, sorted by file
/// name.
pub fn fixture_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let manifest = path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with("manifest-"));
        if path.extension().is_some_and(|x| x == "json") && !manifest && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn read_fixture_dir(dir: &Path) -> Result<Vec<(PathBuf, SiteFixture)>> {
    fixture_paths(dir)?
        .into_iter()
        .map(|p| read_fixture(&p).map(|f| (p, f)))
        .collect()
}

/// One URI per line; blank lines and `#` comments are ignored.
pub fn parse_seed_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

pub fn read_seed_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_seed_list(&text))
}
