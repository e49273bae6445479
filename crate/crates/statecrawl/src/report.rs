//! Report tables and plot-ready series.
//!
//! Each table is written as `{name}.csv` and `{name}.json` under
//! `out/report/`. Ratios and shares are rounded half-up to two decimals,
//! series fractions to four.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use statecrawl_core::analysis::StratumStats;
use statecrawl_core::stats::round_half_up;
use statecrawl_core::{CorpusStats, CoverageReport, OccurrenceRanking};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixture_io::{write_json, write_text};
use crate::pipeline::{self, AnalysisOutput, EstimateOutput, ANALYSIS_FILE, COVERAGE_FILE, ESTIMATE_FILE, REPORT_DIR};

pub const RANKING_SERIES_LEN: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn num(v: f64) -> Cell {
        Cell::Num(round_half_up(v, 2))
    }

    fn fine(v: f64) -> Cell {
        Cell::Num(round_half_up(v, 4))
    }

    fn pct(share: f64) -> Cell {
        Cell::num(share * 100.0)
    }

    fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Cell at `row`, `column` by column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|n| n == column)?;
        self.rows.get(row)?.get(c)
    }
}

pub fn descendant_distribution(stats: &CorpusStats) -> Table {
    let mut t = Table::new(
        "descendant_distribution",
        &["metric", "deferred_mean", "deferred_sd", "nondeferred_mean", "nondeferred_sd"],
    );
    let (d, n) = (&stats.deferred, &stats.nondeferred);
    for (name, a, b) in [
        ("depth", d.depth, n.depth),
        ("breadth", d.breadth, n.breadth),
        ("descendants", d.descendants, n.descendants),
    ] {
        t.push(vec![
            Cell::text(name),
            Cell::num(a.mean),
            Cell::num(a.std_dev),
            Cell::num(b.mean),
            Cell::num(b.std_dev),
        ]);
    }
    t
}

pub fn descendant_range(stats: &CorpusStats) -> Table {
    let mut t = Table::new("descendant_range", &["statistic", "deferred", "nondeferred"]);
    let (d, n) = (stats.deferred.descendants, stats.nondeferred.descendants);
    t.push(vec![Cell::text("min"), Cell::Int(d.min), Cell::Int(n.min)]);
    t.push(vec![Cell::text("max"), Cell::Int(d.max), Cell::Int(n.max)]);
    t.push(vec![Cell::text("median"), Cell::Int(d.median), Cell::Int(n.median)]);
    t.push(vec![
        Cell::text("median_occurrences"),
        Cell::Int(d.median_occurrences),
        Cell::Int(n.median_occurrences),
    ]);
    t
}

pub fn event_kinds(stats: &CorpusStats) -> Table {
    let mut t = Table::new(
        "event_kinds",
        &["kind", "deferred_pct", "nondeferred_pct", "contribution_pct", "contributed"],
    );
    for row in &stats.event_kinds {
        t.push(vec![
            Cell::text(&row.kind),
            Cell::pct(row.deferred_share),
            Cell::pct(row.nondeferred_share),
            Cell::pct(row.contribution_share),
            Cell::Int(row.contributed),
        ]);
    }
    t
}

fn max_level(stats: &CorpusStats) -> u32 {
    stats.all.level_states.keys().copied().max().unwrap_or(0)
}

pub fn contributing_paths(stats: &CorpusStats) -> Table {
    let levels = max_level(stats);
    let mut columns: Vec<String> = ["stratum", "seeds", "descendants", "descendants_per_seed", "contributing_paths", "paths_per_seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for l in 1..=levels {
        columns.push(format!("s{l}_states"));
    }
    for l in 0..=levels {
        columns.push(format!("s{l}_new_resources"));
    }
    let mut t = Table {
        name: "contributing_paths".into(),
        columns,
        rows: Vec::new(),
    };
    let per_seed = |v: u64, s: &StratumStats| if s.seeds == 0 { 0.0 } else { v as f64 / s.seeds as f64 };
    for (name, s) in [("deferred", &stats.deferred), ("nondeferred", &stats.nondeferred), ("all", &stats.all)] {
        let mut row = vec![
            Cell::text(name),
            Cell::Int(s.seeds),
            Cell::Int(s.descendant_total()),
            Cell::num(per_seed(s.descendant_total(), s)),
            Cell::Int(s.contributing_paths),
            Cell::num(per_seed(s.contributing_paths, s)),
        ];
        for l in 1..=levels {
            row.push(Cell::Int(s.level_states.get(&l).copied().unwrap_or(0)));
        }
        for l in 0..=levels {
            row.push(Cell::Int(s.level_distinct.get(&l).copied().unwrap_or(0)));
        }
        t.push(row);
    }
    t
}

pub fn crawl_estimate(estimate: &EstimateOutput) -> Table {
    let mut t = Table::new(
        "crawl_estimate",
        &["row", "frontier", "time_seconds", "time_ratio", "size_ratio", "marginal"],
    );
    let c = &estimate.crawl;
    t.push(vec![
        Cell::text("baseline"),
        Cell::Int(c.baseline_size),
        Cell::num(c.baseline_time),
        Cell::text("-"),
        Cell::text("-"),
        Cell::text("-"),
    ]);
    for l in &c.levels {
        t.push(vec![
            Cell::text(format!("s{}", l.level)),
            Cell::Int(l.frontier),
            Cell::num(l.time_seconds),
            Cell::num(l.time_ratio),
            Cell::num(l.size_ratio),
            l.marginal.map_or(Cell::text("n/a"), Cell::num),
        ]);
    }
    t
}

pub fn top_new_uris(ranking: &OccurrenceRanking) -> Table {
    let mut t = Table::new("top_new_uris", &["rank", "uri", "occurrences"]);
    for (i, (uri, count)) in ranking.top().iter().enumerate() {
        t.push(vec![Cell::Int(i as u64 + 1), Cell::text(uri), Cell::Int(*count)]);
    }
    t.push(vec![Cell::text("total"), Cell::text(""), Cell::Int(ranking.top_k_total)]);
    t
}

fn mb(bytes: u64) -> Cell {
    Cell::num(bytes as f64 / 1e6)
}

/// Storage in decimal megabytes (extrapolated rows in terabytes).
pub fn storage(estimate: &EstimateOutput) -> Option<Table> {
    let s = estimate.storage.as_ref()?;
    let mut t = Table::new("storage", &["item", "deferred", "nondeferred", "total", "unit"]);
    let row = |t: &mut Table, item: &str, f: &dyn Fn(&statecrawl_core::policy::StratumStorage) -> u64| {
        t.push(vec![
            Cell::text(item),
            mb(f(&s.deferred)),
            mb(f(&s.nondeferred)),
            mb(f(&s.total)),
            Cell::text("MB"),
        ]);
    };
    t.push(vec![
        Cell::text("metadata_records"),
        Cell::Int(s.deferred.records),
        Cell::Int(s.nondeferred.records),
        Cell::Int(s.total.records),
        Cell::text("records"),
    ]);
    row(&mut t, "metadata", &|x| x.metadata_bytes);
    let levels = s.total.level_bytes.len();
    for l in 0..levels {
        let name = format!("resources_s{l}");
        row(&mut t, &name, &|x| x.level_bytes.get(l).copied().unwrap_or(0));
    }
    row(&mut t, "resources", &|x| x.resource_bytes);
    row(&mut t, "additional", &|x| x.additional_bytes);
    row(&mut t, "total_with_metadata", &|x| x.total_with_metadata);
    if let Some(x) = &s.extrapolation {
        let tb = |b: u64| Cell::num(b as f64 / 1e12);
        let dash = || Cell::text("-");
        for (item, bytes) in [
            ("monthly_additional", x.monthly_additional_bytes),
            ("yearly_additional", x.yearly_additional_bytes),
            ("extrapolated_total", x.total_bytes),
        ] {
            t.push(vec![Cell::text(item), dash(), dash(), tb(bytes), Cell::text("TB")]);
        }
    }
    Some(t)
}

pub fn series_level_contributions(stats: &CorpusStats) -> Table {
    let mut t = Table::new("series_level_contributions", &["level", "cumulative", "added"]);
    let mut previous = 0;
    for (level, cumulative) in &stats.level_contributions {
        t.push(vec![
            Cell::Int(u64::from(*level)),
            Cell::Int(*cumulative),
            Cell::Int(cumulative - previous),
        ]);
        previous = *cumulative;
    }
    t
}

pub fn series_occurrence_ranking(ranking: &OccurrenceRanking) -> Table {
    let mut t = Table::new("series_occurrence_ranking", &["rank", "uri", "occurrences"]);
    for (i, (uri, count)) in ranking.entries.iter().take(RANKING_SERIES_LEN).enumerate() {
        t.push(vec![Cell::Int(i as u64 + 1), Cell::text(uri), Cell::Int(*count)]);
    }
    t
}

pub fn series_contribution_cdf(stats: &CorpusStats) -> Table {
    let mut t = Table::new("series_contribution_cdf", &["seed_rank", "cumulative_share"]);
    for (rank, share) in &stats.contribution_cdf {
        t.push(vec![Cell::Int(*rank), Cell::fine(*share)]);
    }
    t
}

pub fn series_coverage_by_level(report: &CoverageReport) -> Table {
    let mut t = Table::new(
        "series_coverage_by_level",
        &["level", "resources", "archived", "unarchived", "failed", "fraction_unarchived"],
    );
    for l in &report.levels {
        t.push(vec![
            Cell::Int(u64::from(l.level)),
            Cell::Int(l.resources),
            Cell::Int(l.archived),
            Cell::Int(l.unarchived),
            Cell::Int(l.failed),
            Cell::num(l.fraction_unarchived),
        ]);
    }
    t
}

pub fn series_mime_unarchived(report: &CoverageReport) -> Table {
    let mut t = Table::new("series_mime_unarchived", &["level", "mime", "unarchived"]);
    for (level, mimes) in &report.mime_unarchived {
        let mut sorted: Vec<(&String, &u64)> = mimes.iter().collect();
        sorted.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (mime, n) in sorted {
            t.push(vec![Cell::Int(u64::from(*level)), Cell::text(mime), Cell::Int(*n)]);
        }
    }
    t
}

/// Empirical CDF of unarchived resource sizes per MIME type.
pub fn series_unarchived_sizes(report: &CoverageReport) -> Table {
    let mut t = Table::new("series_unarchived_sizes", &["mime", "size_bytes", "cumulative_share"]);
    let mut by_mime: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for r in &report.unarchived {
        by_mime.entry(&r.mime).or_default().push(r.size_bytes);
    }
    for (mime, mut sizes) in by_mime {
        sizes.sort_unstable();
        let n = sizes.len() as f64;
        for (i, size) in sizes.iter().enumerate() {
            // Only the last of equal sizes carries the step.
            if sizes.get(i + 1) == Some(size) {
                continue;
            }
            t.push(vec![Cell::text(mime), Cell::Int(*size), Cell::fine((i + 1) as f64 / n)]);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: u64,
    pub deferred_seeds: u64,
    pub nondeferred_seeds: u64,
    pub descendants: u64,
    pub deferred_descendants: u64,
    pub nondeferred_descendants: u64,
    pub contributing_paths: u64,
    pub max_depth: u32,
    pub level_contributions: BTreeMap<u32, u64>,
    pub new_resources: u64,
    pub total_insertions: u64,
    pub top_k: Option<TopSummary>,
    /// Unarchived fraction per level.
    pub coverage: Option<BTreeMap<u32, f64>>,
    pub estimate: Option<EstimateSummary>,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopSummary {
    pub k: usize,
    pub total: u64,
    pub share_of_insertions_pct: f64,
    pub share_of_distinct_new_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub times: pipeline::TimeSource,
    pub time_ratios: BTreeMap<u32, f64>,
    pub size_ratios: BTreeMap<u32, f64>,
    pub selected_levels: Vec<u32>,
    pub frontier_retained_pct: f64,
    pub time_saved_pct: f64,
}

fn estimate_summary(e: &EstimateOutput) -> EstimateSummary {
    let selected = e.policies.iter().find(|p| p.kind == e.selected);
    EstimateSummary {
        times: e.times,
        time_ratios: e.crawl.levels.iter().map(|l| (l.level, round_half_up(l.time_ratio, 2))).collect(),
        size_ratios: e.crawl.levels.iter().map(|l| (l.level, round_half_up(l.size_ratio, 2))).collect(),
        selected_levels: selected.map(|p| p.levels_included.iter().copied().collect()).unwrap_or_default(),
        frontier_retained_pct: selected.map_or(0.0, |p| round_half_up(p.frontier_retained * 100.0, 2)),
        time_saved_pct: selected.map_or(0.0, |p| round_half_up(p.time_saved * 100.0, 2)),
    }
}

/// Builds every table the available artifacts allow.
pub fn build(
    analysis: &AnalysisOutput,
    coverage: Option<&CoverageReport>,
    estimate: Option<&EstimateOutput>,
) -> Result<(Vec<Table>, Summary)> {
    let stats = analysis
        .stats
        .as_ref()
        .ok_or_else(|| Error::Stage("analysis has no seeds; nothing to report".into()))?;
    let mut tables = vec![
        descendant_distribution(stats),
        descendant_range(stats),
        event_kinds(stats),
        contributing_paths(stats),
    ];
    if let Some(e) = estimate {
        tables.push(crawl_estimate(e));
    }
    if let Some(r) = &analysis.ranking {
        tables.push(top_new_uris(r));
    }
    if let Some(t) = estimate.and_then(storage) {
        tables.push(t);
    }
    tables.push(series_level_contributions(stats));
    if let Some(r) = &analysis.ranking {
        tables.push(series_occurrence_ranking(r));
    }
    tables.push(series_contribution_cdf(stats));
    if let Some(c) = coverage {
        tables.push(series_coverage_by_level(c));
        tables.push(series_mime_unarchived(c));
        tables.push(series_unarchived_sizes(c));
    }
    let summary = Summary {
        seeds: stats.seeds,
        deferred_seeds: stats.deferred.seeds,
        nondeferred_seeds: stats.nondeferred.seeds,
        descendants: stats.all.descendant_total(),
        deferred_descendants: stats.deferred.descendant_total(),
        nondeferred_descendants: stats.nondeferred.descendant_total(),
        contributing_paths: stats.all.contributing_paths,
        max_depth: stats.all.depth.max as u32,
        level_contributions: stats.level_contributions.clone(),
        new_resources: analysis.seeds.iter().map(|s| s.analysis.new_resource_count()).sum(),
        total_insertions: stats.total_insertions,
        top_k: analysis.ranking.as_ref().map(|r| TopSummary {
            k: r.k,
            total: r.top_k_total,
            share_of_insertions_pct: round_half_up(r.share_of_insertions * 100.0, 2),
            share_of_distinct_new_pct: round_half_up(r.share_of_distinct_new * 100.0, 2),
        }),
        coverage: coverage.map(|c| {
            c.levels
                .iter()
                .map(|l| (l.level, round_half_up(l.fraction_unarchived, 2)))
                .collect()
        }),
        estimate: estimate.map(estimate_summary),
        tables: tables.iter().map(|t| t.name.clone()).collect(),
    };
    Ok((tables, summary))
}

pub fn report(config: &RunConfig) -> Result<Summary> {
    let analysis = pipeline::read_analysis(config)?;
    let coverage = pipeline::read_coverage(config)?;
    let estimate = pipeline::read_estimate(config)?;
    let mut inputs = vec![config.out.join(ANALYSIS_FILE)];
    match &coverage {
        Some(_) => inputs.push(config.out.join(COVERAGE_FILE)),
        None => log::warn!("no {COVERAGE_FILE}; coverage series skipped (run `statecrawl coverage`)"),
    }
    match &estimate {
        Some(_) => inputs.push(config.out.join(ESTIMATE_FILE)),
        None => log::warn!("no {ESTIMATE_FILE}; crawl and storage tables skipped (run `statecrawl estimate`)"),
    }
    let (tables, summary) = build(&analysis, coverage.as_ref(), estimate.as_ref())?;
    let dir = config.out.join(REPORT_DIR);
    let mut outputs: Vec<PathBuf> = Vec::new();
    for t in &tables {
        let csv = dir.join(format!("{}.csv", t.name));
        let json = dir.join(format!("{}.json", t.name));
        write_text(&csv, &t.to_csv())?;
        write_json(&json, t)?;
        outputs.extend([csv, json]);
    }
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    outputs.push(summary_path);
    pipeline::write_stage_manifest(config, "report", &inputs, &outputs)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_half_up() {
        assert_eq!(Cell::num(0.125), Cell::Num(0.13));
        assert_eq!(Cell::pct(0.5), Cell::Num(50.0));
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![Cell::Int(3), Cell::num(2.5)]);
        t.push(vec![Cell::text("x,y"), Cell::num(1.0)]);
        assert_eq!(t.to_csv(), "a,b\n3,2.5\n\"x,y\",1\n");
        assert_eq!(t.cell(0, "b"), Some(&Cell::Num(2.5)));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"name":"t","columns":["a","b"],"rows":[[3,2.5],["x,y",1.0]]}"#);
    }
}
