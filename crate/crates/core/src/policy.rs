//! Crawl-time model, policy selection and storage estimates.
//!
//! Level times are measured inputs. [`CrawlRates`] only offers a forward
//! prediction when no measurements exist.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::CorpusStats;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyError {
    ZeroBaseline,
    NoLevels,
    /// Frontier and time maps name different levels.
    LevelMismatch,
    InvalidRates,
    /// A time or size is negative or not finite.
    InvalidInput,
    ZeroSeeds,
    ZeroMonths,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyError::ZeroBaseline => "baseline size and time must be positive",
            PolicyError::NoLevels => "estimate has no levels",
            PolicyError::LevelMismatch => "frontier sizes and times cover different levels",
            PolicyError::InvalidRates => "crawl rates must be positive",
            PolicyError::InvalidInput => "times must be finite and non-negative",
            PolicyError::ZeroSeeds => "seed count must be positive",
            PolicyError::ZeroMonths => "months must be at least 1",
        })
    }
}

impl core::error::Error for PolicyError {}

/// URIs per second for a plain archival crawl and for a descendant crawl.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlRates {
    pub baseline_rate: f64,
    pub descendant_rate: f64,
}

impl Default for CrawlRates {
    fn default() -> Self {
        Self {
            baseline_rate: 2.065,
            descendant_rate: 0.170,
        }
    }
}

impl CrawlRates {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let ok = |r: f64| r.is_finite() && r > 0.0;
        if ok(self.baseline_rate) && ok(self.descendant_rate) {
            Ok(())
        } else {
            Err(PolicyError::InvalidRates)
        }
    }

    /// Modelled (not measured) times: the baseline at `baseline_rate`,
    /// every level at `descendant_rate`.
    pub fn predict_times(
        &self,
        frontier_by_level: &BTreeMap<u32, u64>,
        baseline_size: u64,
    ) -> Result<(f64, BTreeMap<u32, f64>), PolicyError> {
        self.validate()?;
        let baseline = baseline_size as f64 / self.baseline_rate;
        let levels = frontier_by_level
            .iter()
            .map(|(level, size)| (*level, *size as f64 / self.descendant_rate))
            .collect();
        Ok((baseline, levels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub level: u32,
    pub frontier: u64,
    pub time_seconds: f64,
    pub time_ratio: f64,
    pub size_ratio: f64,
    /// New URIs per added second against the previous row; `None` when
    /// time did not increase.
    pub marginal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlEstimate {
    pub baseline_size: u64,
    pub baseline_time: f64,
    pub levels: Vec<LevelEstimate>,
    /// Levels whose marginal is undefined.
    pub flagged: Vec<u32>,
}

impl CrawlEstimate {
    pub fn level(&self, level: u32) -> Option<&LevelEstimate> {
        self.levels.iter().find(|l| l.level == level)
    }
}

pub fn estimate_crawl(
    frontier_by_level: &BTreeMap<u32, u64>,
    baseline_size: u64,
    times_by_level: &BTreeMap<u32, f64>,
    baseline_time: f64,
) -> Result<CrawlEstimate, PolicyError> {
    if baseline_size == 0 || !baseline_time.is_finite() || baseline_time <= 0.0 {
        return Err(PolicyError::ZeroBaseline);
    }
    if !frontier_by_level.keys().eq(times_by_level.keys()) {
        return Err(PolicyError::LevelMismatch);
    }
    if frontier_by_level.is_empty() {
        return Err(PolicyError::NoLevels);
    }
    let mut levels = Vec::with_capacity(frontier_by_level.len());
    let mut flagged = Vec::new();
    let (mut prev_size, mut prev_time) = (baseline_size as f64, baseline_time);
    for ((&level, &size), &time) in frontier_by_level.iter().zip(times_by_level.values()) {
        if !time.is_finite() || time < 0.0 {
            return Err(PolicyError::InvalidInput);
        }
        let size_f = size as f64;
        let marginal = if time > prev_time {
            Some((size_f - prev_size) / (time - prev_time))
        } else {
            flagged.push(level);
            None
        };
        levels.push(LevelEstimate {
            level,
            frontier: size,
            time_seconds: time,
            time_ratio: time / baseline_time,
            size_ratio: size_f / baseline_size as f64,
            marginal,
        });
        prev_size = size_f;
        prev_time = time;
    }
    Ok(CrawlEstimate {
        baseline_size,
        baseline_time,
        levels,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    MaxCoverage,
    #[serde(rename = "MaxROI")]
    MaxRoi,
}

impl PolicyKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "maxcoverage" => Some(PolicyKind::MaxCoverage),
            "maxroi" => Some(PolicyKind::MaxRoi),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::MaxCoverage => "MaxCoverage",
            PolicyKind::MaxRoi => "MaxROI",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlPolicy {
    pub kind: PolicyKind,
    pub levels_included: BTreeSet<u32>,
    /// Frontier size and time at the deepest included level.
    pub frontier: u64,
    pub time_seconds: f64,
    /// Against the deepest discovered level.
    pub frontier_retained: f64,
    pub time_saved: f64,
}

/// MaxROI repeatedly drops the deepest level while its marginal is strictly
/// below the best marginal among shallower levels. The first level is never
/// dropped and an undefined marginal stops the search.
pub fn select_policy(kind: PolicyKind, estimate: &CrawlEstimate) -> Result<CrawlPolicy, PolicyError> {
    let rows = &estimate.levels;
    if rows.is_empty() {
        return Err(PolicyError::NoLevels);
    }
    let mut keep = rows.len();
    if kind == PolicyKind::MaxRoi {
        while keep > 1 {
            let Some(deepest) = rows[keep - 1].marginal else {
                break;
            };
            let best = rows[..keep - 1]
                .iter()
                .filter_map(|r| r.marginal)
                .fold(f64::NEG_INFINITY, f64::max);
            if deepest < best {
                keep -= 1;
            } else {
                break;
            }
        }
    }
    let last = &rows[keep - 1];
    let full = &rows[rows.len() - 1];
    Ok(CrawlPolicy {
        kind,
        levels_included: rows[..keep].iter().map(|r| r.level).collect(),
        frontier: last.frontier,
        time_seconds: last.time_seconds,
        frontier_retained: ratio(last.frontier as f64, full.frontier as f64),
        time_saved: if full.time_seconds > 0.0 {
            1.0 - last.time_seconds / full.time_seconds
        } else {
            0.0
        },
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else {
        a / b
    }
}

/// How metadata records are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MetadataAccounting {
    #[default]
    PerDescendant,
    PerSeed,
}

/// Counts for one stratum. Index `i` of the vectors is level `i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StratumInput {
    pub seeds: u64,
    pub descendants: u64,
    pub level_resources: Vec<u64>,
    pub mean_bytes: Vec<u64>,
}

impl StratumInput {
    fn mean_at(&self, level: usize) -> u64 {
        self.mean_bytes
            .get(level)
            .or(self.mean_bytes.last())
            .copied()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageInput {
    pub deferred: StratumInput,
    pub nondeferred: StratumInput,
    pub metadata_record_bytes: u64,
    pub accounting: MetadataAccounting,
}

pub const DEFAULT_METADATA_RECORD_BYTES: u64 = 16_450;

impl StorageInput {
    /// Level 0 counts every seed's `R0` (not deduplicated across seeds);
    /// deeper levels use the stratum's deduplicated new resources.
    /// `mean_bytes` is `[deferred, nondeferred]` per level.
    pub fn from_stats(
        stats: &CorpusStats,
        mean_bytes: [Vec<u64>; 2],
        metadata_record_bytes: u64,
        accounting: MetadataAccounting,
    ) -> Self {
        let stratum = |s: &crate::analysis::StratumStats, means: Vec<u64>| {
            let mut level_resources = Vec::new();
            level_resources.push(s.root_resources_total);
            let max = s.level_distinct.keys().copied().max().unwrap_or(0);
            for level in 1..=max {
                level_resources.push(s.level_distinct.get(&level).copied().unwrap_or(0));
            }
            StratumInput {
                seeds: s.seeds,
                descendants: s.descendant_total(),
                level_resources,
                mean_bytes: means,
            }
        };
        let [deferred, nondeferred] = mean_bytes;
        StorageInput {
            deferred: stratum(&stats.deferred, deferred),
            nondeferred: stratum(&stats.nondeferred, nondeferred),
            metadata_record_bytes,
            accounting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StratumStorage {
    pub records: u64,
    pub metadata_bytes: u64,
    pub level_bytes: Vec<u64>,
    pub resource_bytes: u64,
    /// Metadata plus resources beyond level 0.
    pub additional_bytes: u64,
    pub total_without_metadata: u64,
    pub total_with_metadata: u64,
}

impl StratumStorage {
    fn add(&self, other: &StratumStorage) -> StratumStorage {
        let n = self.level_bytes.len().max(other.level_bytes.len());
        let at = |v: &Vec<u64>, i: usize| v.get(i).copied().unwrap_or(0);
        StratumStorage {
            records: self.records + other.records,
            metadata_bytes: self.metadata_bytes + other.metadata_bytes,
            level_bytes: (0..n).map(|i| at(&self.level_bytes, i) + at(&other.level_bytes, i)).collect(),
            resource_bytes: self.resource_bytes + other.resource_bytes,
            additional_bytes: self.additional_bytes + other.additional_bytes,
            total_without_metadata: self.total_without_metadata + other.total_without_metadata,
            total_with_metadata: self.total_with_metadata + other.total_with_metadata,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrapolationBase {
    pub uris: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub months: u64,
    pub base: ExtrapolationBase,
    pub seeds: u64,
    pub monthly_additional_bytes: u64,
    pub additional_bytes: u64,
    pub base_bytes: u64,
    pub total_bytes: u64,
    pub yearly_additional_bytes: u64,
}

/// All byte figures are decimal (1 KB = 1000 B).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageEstimate {
    pub deferred: StratumStorage,
    pub nondeferred: StratumStorage,
    pub total: StratumStorage,
    pub extrapolation: Option<Extrapolation>,
}

fn stratum_storage(input: &StratumInput, record_bytes: u64, accounting: MetadataAccounting) -> StratumStorage {
    let records = match accounting {
        MetadataAccounting::PerDescendant => input.descendants,
        MetadataAccounting::PerSeed => {
            if input.descendants == 0 {
                0
            } else {
                input.seeds
            }
        }
    };
    let metadata_bytes = records * record_bytes;
    let level_bytes: Vec<u64> = input
        .level_resources
        .iter()
        .enumerate()
        .map(|(level, count)| count * input.mean_at(level))
        .collect();
    let resource_bytes: u64 = level_bytes.iter().sum();
    let descendant_bytes: u64 = level_bytes.iter().skip(1).sum();
    StratumStorage {
        records,
        metadata_bytes,
        resource_bytes,
        additional_bytes: metadata_bytes + descendant_bytes,
        total_without_metadata: resource_bytes,
        total_with_metadata: resource_bytes + metadata_bytes,
        level_bytes,
    }
}

pub fn estimate_storage(input: &StorageInput) -> StorageEstimate {
    let deferred = stratum_storage(&input.deferred, input.metadata_record_bytes, input.accounting);
    let nondeferred = stratum_storage(&input.nondeferred, input.metadata_record_bytes, input.accounting);
    let total = deferred.add(&nondeferred);
    StorageEstimate {
        deferred,
        nondeferred,
        total,
        extrapolation: None,
    }
}

/// Scales the corpus' additional bytes to `base.uris` URIs per month
/// (rounded to whole bytes) and then by `months`.
pub fn extrapolate(
    base: ExtrapolationBase,
    per_seed: &StorageEstimate,
    seeds: u64,
    months: u64,
) -> Result<StorageEstimate, PolicyError> {
    if seeds == 0 {
        return Err(PolicyError::ZeroSeeds);
    }
    if months == 0 {
        return Err(PolicyError::ZeroMonths);
    }
    let scaled = u128::from(per_seed.total.additional_bytes) * u128::from(base.uris);
    let monthly = ((scaled + u128::from(seeds) / 2) / u128::from(seeds)) as u64;
    let additional_bytes = monthly * months;
    let base_bytes = base.bytes * months;
    let mut out = per_seed.clone();
    out.extrapolation = Some(Extrapolation {
        months,
        seeds,
        monthly_additional_bytes: monthly,
        additional_bytes,
        base_bytes,
        total_bytes: base_bytes + additional_bytes,
        yearly_additional_bytes: monthly * 12,
        base,
    });
    Ok(out)
}
