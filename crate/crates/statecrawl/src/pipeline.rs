//! Pipeline stages. Each stage reads the previous stage's files from the
//! output directory and writes its own plus a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statecrawl_core::policy::{ExtrapolationBase, StorageInput};
use statecrawl_core::stats::round_half_up;
use statecrawl_core::{
    aggregate, analyze_tree, build_tree, classify_tree, corpus_frontier, coverage, emit_record, estimate_crawl,
    estimate_storage, extrapolate, occurrence_ranking, select_policy, CorpusStats, CoverageReport, CrawlEstimate,
    CrawlPolicy, DateTime, OccurrenceRanking, PolicyKind, SeedAnalysis, SeedClassification, SimulatedDriver,
    SiteFixture, StateTree, StorageEstimate, UriR,
};

use crate::config::{ArchiveSource, RunConfig};
use crate::error::{Error, Result};
use crate::fixture_io::{read_fixture, read_json, read_seed_list, write_fixture_dir, write_json, write_text};
use crate::generate::{reference_corpus, random_corpus, RandomSpec};
use crate::holdings::{format_holdings, read_holdings};
use crate::live::LiveArchive;

pub const CRAWL_FILE: &str = "crawl.json";
pub const METADATA_FILE: &str = "metadata.ndjson";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const COVERAGE_FILE: &str = "coverage.json";
pub const COVERAGE_CSV: &str = "coverage.csv";
pub const ESTIMATE_FILE: &str = "estimate.json";
pub const REPORT_DIR: &str = "report";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    /// Path to hex SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

fn digests<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<BTreeMap<String, String>> {
    paths
        .into_iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

pub fn manifest_path(out: &Path, stage: &str) -> PathBuf {
    out.join(format!("manifest-{stage}.json"))
}

pub fn write_stage_manifest(config: &RunConfig, stage: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
    write_manifest(&config.out, stage, config, inputs, outputs)
}

pub fn write_manifest<C: Serialize>(
    dir: &Path,
    stage: &str,
    config: &C,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<()> {
    let manifest = Manifest {
        stage: stage.to_string(),
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config).expect("in-memory serialization"),
        inputs: digests(inputs)?,
        outputs: digests(outputs)?,
    };
    write_json(&manifest_path(dir, stage), &manifest)
}

fn upstream(config: &RunConfig, file: &str, stage: &'static str) -> Result<PathBuf> {
    let path = config.out.join(file);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact { path, stage })
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Stage(format!("thread pool: {e}")))
}

/// Large artifacts are written compactly.
fn write_compact<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

// gen-fixture

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Random(RandomSpec),
    Reference { rng_seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSummary {
    pub fixtures: usize,
    pub holdings: Option<PathBuf>,
}

pub const HOLDINGS_FILE: &str = "holdings.txt";

fn preset_config(preset: &Preset) -> serde_json::Value {
    match preset {
        Preset::Random(spec) => serde_json::json!({ "preset": "random", "spec": spec }),
        Preset::Reference { rng_seed } => serde_json::json!({ "preset": "reference", "rng_seed": rng_seed }),
    }
}

/// Writes fixtures to `dir`; the reference preset also writes its holdings file
/// there.
pub fn gen_fixture(dir: &Path, preset: &Preset) -> Result<GenSummary> {
    let (fixtures, holdings) = match preset {
        Preset::Random(spec) => (random_corpus(spec).map_err(|e| Error::Config(e.to_string()))?, None),
        Preset::Reference { rng_seed } => {
            let corpus = reference_corpus(*rng_seed);
            (corpus.fixtures, Some(corpus.holdings))
        }
    };
    let existing = fs::read_dir(dir).map(|d| d.count()).unwrap_or(0);
    if existing > 0 {
        log::warn!("{} is not empty; fixture files will be overwritten", dir.display());
    }
    write_fixture_dir(dir, &fixtures)?;
    let holdings = match holdings {
        Some(archive) => {
            let path = dir.join(HOLDINGS_FILE);
            write_text(&path, &format_holdings(&archive))?;
            Some(path)
        }
        None => None,
    };
    let mut outputs = crate::fixture_io::fixture_paths(dir)?;
    outputs.extend(holdings.clone());
    write_manifest(dir, "gen-fixture", &preset_config(preset), &[], &outputs)?;
    Ok(GenSummary {
        fixtures: fixtures.len(),
        holdings,
    })
}

// crawl

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawledSeed {
    /// Fixture file name.
    pub fixture: String,
    pub classification: SeedClassification,
    pub tree: StateTree,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrawlOutput {
    pub seeds: Vec<CrawledSeed>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrawlSummary {
    pub seeds: usize,
    pub deferred: usize,
    pub descendants: usize,
    pub duplicate_scripts: u64,
}

fn crawl_one(config: &RunConfig, name: &str, fixture: &SiteFixture) -> Result<CrawledSeed> {
    let fail = |e: String| Error::Stage(format!("{name}: {e}"));
    let mut driver = SimulatedDriver::new(config.session_patterns.clone()).with_markup_bytes(config.markup_bytes);
    let seed = driver.insert(fixture).map_err(|e| fail(e.to_string()))?;
    let tree = build_tree(&seed, &mut driver, &config.limits).map_err(|e| fail(e.to_string()))?;
    Ok(CrawledSeed {
        fixture: name.to_string(),
        classification: classify_tree(&tree),
        tree,
    })
}

/// Fixture file name and contents.
type Named = (String, SiteFixture);

/// Fixture files to crawl, in crawl order.
fn crawl_targets(config: &RunConfig) -> Result<(Vec<PathBuf>, Vec<Named>)> {
    let mut inputs = crate::fixture_io::fixture_paths(&config.fixtures)?;
    let mut loaded = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        loaded.push((name, read_fixture(path)?));
    }
    let Some(list) = &config.seeds else {
        return Ok((inputs, loaded));
    };
    let wanted = read_seed_list(list)?;
    let mut by_seed: BTreeMap<String, usize> = BTreeMap::new();
    for (i, (name, fixture)) in loaded.iter().enumerate() {
        let seed = fixture
            .seed_uri(&config.session_patterns)
            .map_err(|e| Error::Stage(format!("{name}: {e}")))?;
        by_seed.entry(seed.canonical().to_string()).or_insert(i);
    }
    let mut picked = Vec::with_capacity(wanted.len());
    for raw in &wanted {
        let uri = UriR::parse(raw, &config.session_patterns).map_err(|e| Error::Stage(format!("seed {raw}: {e}")))?;
        let i = *by_seed
            .get(uri.canonical())
            .ok_or_else(|| Error::Stage(format!("seed {raw} has no fixture in {}", config.fixtures.display())))?;
        picked.push(loaded[i].clone());
    }
    inputs.push(list.clone());
    Ok((inputs, picked))
}

pub fn crawl(config: &RunConfig) -> Result<CrawlSummary> {
    config.check_crawl_inputs()?;
    let started = config.started_at()?;
    let (inputs, targets) = crawl_targets(config)?;
    if targets.is_empty() {
        log::warn!("no seeds to crawl; writing empty outputs");
    }
    let seeds: Vec<CrawledSeed> = pool(config.workers)?.install(|| {
        targets
            .par_iter()
            .map(|(name, fixture)| crawl_one(config, name, fixture))
            .collect::<Result<_>>()
    })?;

    let mut ndjson = String::new();
    let mut ordinal = 0i64;
    for s in &seeds {
        for state in s.tree.nodes.iter().skip(1) {
            let at = DateTime::from_unix_seconds(started.unix_seconds() + ordinal);
            ordinal += 1;
            let record = emit_record(state, &s.tree, at).map_err(|e| Error::Stage(format!("{}: {e}", s.fixture)))?;
            ndjson.push_str(&serde_json::to_string(&record).expect("in-memory serialization"));
            ndjson.push('\n');
        }
    }
    let summary = CrawlSummary {
        seeds: seeds.len(),
        deferred: seeds.iter().filter(|s| s.classification.deferred).count(),
        descendants: seeds.iter().map(|s| s.tree.descendant_count()).sum(),
        duplicate_scripts: seeds.iter().map(|s| s.tree.duplicate_scripts).sum(),
    };
    let crawl_path = config.out.join(CRAWL_FILE);
    let metadata_path = config.out.join(METADATA_FILE);
    write_compact(&crawl_path, &CrawlOutput { seeds })?;
    write_text(&metadata_path, &ndjson)?;
    write_stage_manifest(config, "crawl", &inputs, &[crawl_path, metadata_path])?;
    Ok(summary)
}

// analyze

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub seeds: Vec<SeedAnalysis>,
    /// `None` for an empty corpus.
    pub stats: Option<CorpusStats>,
    pub ranking: Option<OccurrenceRanking>,
}

pub fn analyze(config: &RunConfig) -> Result<AnalysisOutput> {
    let input = upstream(config, CRAWL_FILE, "crawl")?;
    let crawled: CrawlOutput = read_json(&input)?;
    let seeds: Vec<SeedAnalysis> = pool(config.workers)?.install(|| {
        crawled
            .seeds
            .par_iter()
            .map(|s| SeedAnalysis {
                classification: s.classification.clone(),
                analysis: analyze_tree(&s.tree),
            })
            .collect()
    });
    let stats = match aggregate(&seeds) {
        Ok(stats) => Some(stats),
        Err(e) => {
            log::warn!("{e}");
            None
        }
    };
    let ranking = occurrence_ranking(&seeds, config.top_k).ok();
    let output = AnalysisOutput { seeds, stats, ranking };
    let path = config.out.join(ANALYSIS_FILE);
    write_compact(&path, &output)?;
    write_stage_manifest(config, "analyze", &[input], &[path])?;
    Ok(output)
}

pub fn read_analysis(config: &RunConfig) -> Result<AnalysisOutput> {
    read_json(&upstream(config, ANALYSIS_FILE, "analyze")?)
}

// coverage

pub fn coverage_csv(report: &CoverageReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "resources", "archived", "unarchived", "failed", "fraction_unarchived"])
        .expect("in-memory csv");
    for row in &report.levels {
        w.write_record([
            row.level.to_string(),
            row.resources.to_string(),
            row.archived.to_string(),
            row.unarchived.to_string(),
            row.failed.to_string(),
            format!("{:.4}", row.fraction_unarchived),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn coverage_stage(config: &RunConfig) -> Result<CoverageReport> {
    let source = config.archive_source()?;
    let input = upstream(config, ANALYSIS_FILE, "analyze")?;
    let analysis: AnalysisOutput = read_json(&input)?;
    let frontier = corpus_frontier(&analysis.seeds);
    let mut inputs = vec![input];
    let report = match source {
        ArchiveSource::Holdings(path) => {
            let archive = read_holdings(&path, &config.session_patterns)?;
            inputs.push(path);
            coverage(&frontier, &archive)
        }
        ArchiveSource::Live(endpoint) => {
            let live = LiveArchive::new(endpoint, config.live.clone());
            let report = coverage(&frontier, &live);
            log::info!("{} TimeMap requests for {} lookups", live.requests(), report.lookups);
            report
        }
    };
    if report.errors > 0 {
        log::warn!("{} lookups failed and are excluded from the fractions", report.errors);
    }
    let json = config.out.join(COVERAGE_FILE);
    let csv_path = config.out.join(COVERAGE_CSV);
    write_json(&json, &report)?;
    write_text(&csv_path, &coverage_csv(&report))?;
    write_stage_manifest(config, "coverage", &inputs, &[json, csv_path])?;
    Ok(report)
}

// estimate

/// Frontier sizes and measured times given on the command line; index =
/// level.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectEstimate {
    pub baseline_size: u64,
    pub baseline_time: f64,
    pub sizes: Vec<u64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSource {
    Measured,
    /// Predicted from crawl rates.
    Modelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    /// `direct` or `analysis`.
    pub source: String,
    pub times: TimeSource,
    pub crawl: CrawlEstimate,
    pub policies: Vec<CrawlPolicy>,
    pub selected: PolicyKind,
    pub storage: Option<StorageEstimate>,
}

fn indexed<T: Copy>(values: &[T]) -> BTreeMap<u32, T> {
    values.iter().enumerate().map(|(i, v)| (i as u32, *v)).collect()
}

fn stage_err(e: impl std::fmt::Display) -> Error {
    Error::Stage(e.to_string())
}

pub fn estimate(config: &RunConfig, direct: Option<&DirectEstimate>) -> Result<EstimateOutput> {
    let mut inputs = Vec::new();
    let (source, sizes, baseline_size, measured, stats) = match direct {
        Some(d) => {
            if d.sizes.len() != d.times.len() {
                return Err(Error::Config(format!(
                    "{} sizes but {} times; give one of each per level",
                    d.sizes.len(),
                    d.times.len()
                )));
            }
            (
                "direct",
                indexed(&d.sizes),
                d.baseline_size,
                Some((d.baseline_time, indexed(&d.times))),
                None,
            )
        }
        None => {
            let measured = match (config.estimate.baseline_time, &config.estimate.times) {
                (Some(b), Some(t)) => Some((b, indexed(t))),
                (None, None) => None,
                _ => {
                    return Err(Error::Config(
                        "estimate.baseline_time and estimate.times must be given together".into(),
                    ))
                }
            };
            let path = upstream(config, ANALYSIS_FILE, "analyze")?;
            let analysis: AnalysisOutput = read_json(&path)?;
            inputs.push(path);
            let stats = analysis
                .stats
                .ok_or_else(|| Error::Stage("analysis has no seeds to estimate from".into()))?;
            let baseline = match config.estimate.baseline_size {
                Some(size) => size,
                None => match stats.nondeferred.level_distinct.get(&0).copied().unwrap_or(0) {
                    0 => {
                        log::warn!("no nondeferred resources; using the whole s0 frontier as the baseline");
                        stats.level_contributions.get(&0).copied().unwrap_or(0)
                    }
                    n => n,
                },
            };
            ("analysis", stats.level_contributions.clone(), baseline, measured, Some(stats))
        }
    };
    let (times, baseline_time, time_source) = match measured {
        Some((b, t)) => (t, b, TimeSource::Measured),
        None => {
            let (b, t) = config.rates.predict_times(&sizes, baseline_size).map_err(stage_err)?;
            (t, b, TimeSource::Modelled)
        }
    };
    let crawl = estimate_crawl(&sizes, baseline_size, &times, baseline_time).map_err(stage_err)?;
    let policies = [PolicyKind::MaxCoverage, PolicyKind::MaxRoi]
        .into_iter()
        .map(|k| select_policy(k, &crawl).map_err(stage_err))
        .collect::<Result<Vec<_>>>()?;
    let storage = match &stats {
        Some(stats) => {
            let e = &config.estimate;
            let input = StorageInput::from_stats(
                stats,
                [e.mean_bytes_deferred.clone(), e.mean_bytes_nondeferred.clone()],
                e.metadata_record_bytes,
                e.accounting,
            );
            let base = ExtrapolationBase {
                uris: e.base_uris,
                bytes: e.base_bytes,
            };
            Some(extrapolate(base, &estimate_storage(&input), stats.seeds, e.months).map_err(stage_err)?)
        }
        None => None,
    };
    let output = EstimateOutput {
        source: source.into(),
        times: time_source,
        crawl,
        policies,
        selected: config.policy,
        storage,
    };
    let path = config.out.join(ESTIMATE_FILE);
    write_json(&path, &output)?;
    write_stage_manifest(config, "estimate", &inputs, &[path])?;
    Ok(output)
}

fn ratio(v: f64) -> String {
    format!("{:.2}x", round_half_up(v, 2))
}

/// Plain-text crawl table.
pub fn estimate_table(output: &EstimateOutput) -> String {
    let crawl = &output.crawl;
    let label = match output.times {
        TimeSource::Measured => "measured",
        TimeSource::Modelled => "modelled",
    };
    let mut lines = vec![
        format!("times: {label}"),
        format!(
            "{:<8} {:>10} {:>12} {:>10} {:>10} {:>10}",
            "level", "frontier", "time_s", "time_x", "size_x", "new/s"
        ),
        format!(
            "{:<8} {:>10} {:>12.2} {:>10} {:>10} {:>10}",
            "baseline", crawl.baseline_size, crawl.baseline_time, "-", "-", "-"
        ),
    ];
    for l in &crawl.levels {
        let marginal = l.marginal.map_or("n/a".to_string(), |m| format!("{:.2}", round_half_up(m, 2)));
        lines.push(format!(
            "{:<8} {:>10} {:>12.2} {:>10} {:>10} {:>10}",
            format!("s{}", l.level),
            l.frontier,
            l.time_seconds,
            ratio(l.time_ratio),
            ratio(l.size_ratio),
            marginal
        ));
    }
    for p in &output.policies {
        let levels: Vec<String> = p.levels_included.iter().map(|l| format!("s{l}")).collect();
        let mark = if p.kind == output.selected { " (selected)" } else { "" };
        lines.push(format!(
            "{}{mark}: {} | frontier {:.1}% | time saved {:.1}%",
            p.kind.name(),
            levels.join(","),
            round_half_up(p.frontier_retained * 100.0, 1),
            round_half_up(p.time_saved * 100.0, 1)
        ));
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

pub fn read_estimate(config: &RunConfig) -> Result<Option<EstimateOutput>> {
    let path = config.out.join(ESTIMATE_FILE);
    if path.is_file() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn read_coverage(config: &RunConfig) -> Result<Option<CoverageReport>> {
    let path = config.out.join(COVERAGE_FILE);
    if path.is_file() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}
