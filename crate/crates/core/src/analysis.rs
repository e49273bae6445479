//! Path analysis over descendant trees and corpus aggregation.
//!
//! A state contributes when it requests something its parent did not
//! (`R_new = R_{n+1} - R_n`); the root-to-state path of every contributing
//! state is kept. Corpus-level figures deduplicate globally by canonical URI.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::crawler::SeedClassification;
use crate::event::EventKind;
use crate::resource::ResourceSet;
use crate::state::{new_resources, StateId, StatePath, StateTree};
use crate::stats::Summary;
use crate::uri::UriR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAnalysis {
    pub seed: UriR,
    /// `R0`.
    pub root_resources: ResourceSet,
    pub contributing_paths: Vec<StatePath>,
    /// Union of `R_new` over the states of each level (levels >= 1).
    pub per_level_new: BTreeMap<u32, ResourceSet>,
    /// `RP` over the whole tree.
    pub rp_total: ResourceSet,
    pub descendant_count: u64,
    pub depth: u32,
    /// Events available at `s0`.
    pub breadth: u64,
    /// Number of states per level, root included.
    pub level_states: BTreeMap<u32, u64>,
    /// Per canonical URI: how many states had it in their `R_new`.
    pub insertions: BTreeMap<String, u64>,
    /// Per event bucket: resources first discovered by a script ending in
    /// that kind of event.
    pub kind_contributions: BTreeMap<String, u64>,
    /// Event buckets attached anywhere in the tree.
    pub kinds_present: BTreeSet<String>,
    /// States visited by the analysis.
    pub visited: u64,
}

impl PathAnalysis {
    pub fn contributing_path_count(&self) -> u64 {
        self.contributing_paths.len() as u64
    }

    /// Distinct resources the descendants added beyond `R0`.
    pub fn new_resource_count(&self) -> u64 {
        (self.rp_total.len() - self.root_resources.len()) as u64
    }
}

/// Walks every state of `tree` once.
pub fn analyze_tree(tree: &StateTree) -> PathAnalysis {
    let root = tree.root();
    let mut per_level_new: BTreeMap<u32, ResourceSet> = BTreeMap::new();
    let mut level_states: BTreeMap<u32, u64> = BTreeMap::new();
    let mut rp_total = root.resources.clone();
    let mut contributing_paths = Vec::new();
    let mut insertions: BTreeMap<String, u64> = BTreeMap::new();
    let mut kind_contributions: BTreeMap<String, u64> = BTreeMap::new();
    let mut kinds_present: BTreeSet<String> = BTreeSet::new();
    let mut discovered: BTreeSet<&str> = root.resources.keys().collect();
    let mut visited = 0u64;

    for node in &tree.nodes {
        visited += 1;
        *level_states.entry(node.level).or_insert(0) += 1;
        for event in &node.available_events {
            kinds_present.insert(event.kind.bucket().to_string());
        }
        let Some(edge) = tree.incoming(node.id) else {
            continue;
        };
        let parent = &tree.nodes[edge.parent.index()];
        let fresh = new_resources(&parent.resources, &node.resources);
        rp_total.extend_from(&node.resources);
        let level_set = per_level_new.entry(node.level).or_default();
        if fresh.is_empty() {
            continue;
        }
        let bucket = edge.event.kind.bucket();
        for key in fresh.keys() {
            *insertions.entry(key.to_string()).or_insert(0) += 1;
        }
        for resource in node.resources.iter() {
            if fresh.contains(resource) && discovered.insert(resource.key()) {
                *kind_contributions.entry(bucket.to_string()).or_insert(0) += 1;
            }
        }
        level_set.extend_from(&fresh);
        contributing_paths.push(tree.path_to(node.id).expect("node taken from the tree"));
    }

    PathAnalysis {
        seed: tree.seed.clone(),
        root_resources: root.resources.clone(),
        contributing_paths,
        per_level_new,
        rp_total,
        descendant_count: tree.descendant_count() as u64,
        depth: tree.depth(),
        breadth: root.available_events.len() as u64,
        level_states,
        insertions,
        kind_contributions,
        kinds_present,
        visited,
    }
}

/// One seed's classification and analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAnalysis {
    pub classification: SeedClassification,
    pub analysis: PathAnalysis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    EmptyCorpus,
    ZeroRank,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::EmptyCorpus => f.write_str("corpus has no seeds"),
            AnalysisError::ZeroRank => f.write_str("ranking size k must be at least 1"),
        }
    }
}

impl core::error::Error for AnalysisError {}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StratumStats {
    pub seeds: u64,
    pub descendants: Summary,
    pub depth: Summary,
    pub breadth: Summary,
    pub contributing_paths: u64,
    /// States per level across the stratum, root included.
    pub level_states: BTreeMap<u32, u64>,
    /// Sum of per-seed `|R0|`.
    pub root_resources_total: u64,
    /// Distinct resources at each level, deduplicated across the stratum
    /// and against shallower levels (level 0 is the `R0` union).
    pub level_distinct: BTreeMap<u32, u64>,
}

impl StratumStats {
    fn of<'a>(members: impl Iterator<Item = &'a PathAnalysis> + Clone) -> Self {
        let descendants: Vec<u64> = members.clone().map(|a| a.descendant_count).collect();
        let depth: Vec<u64> = members.clone().map(|a| u64::from(a.depth)).collect();
        let breadth: Vec<u64> = members.clone().map(|a| a.breadth).collect();
        let mut level_states = BTreeMap::new();
        for a in members.clone() {
            for (level, count) in &a.level_states {
                *level_states.entry(*level).or_insert(0) += count;
            }
        }
        let contributions = contributions_of(members.clone());
        let mut level_distinct = BTreeMap::new();
        let mut previous = 0;
        for (level, cumulative) in contributions {
            level_distinct.insert(level, cumulative - previous);
            previous = cumulative;
        }
        StratumStats {
            seeds: descendants.len() as u64,
            descendants: Summary::of(&descendants),
            depth: Summary::of(&depth),
            breadth: Summary::of(&breadth),
            contributing_paths: members.clone().map(|a| a.contributing_path_count()).sum(),
            level_states,
            root_resources_total: members.map(|a| a.root_resources.len() as u64).sum(),
            level_distinct,
        }
    }

    /// Descendant states across the stratum.
    pub fn descendant_total(&self) -> u64 {
        self.descendants.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventKindRow {
    pub kind: String,
    pub deferred_seeds: u64,
    pub nondeferred_seeds: u64,
    /// Share of deferred seeds with this kind attached.
    pub deferred_share: f64,
    pub nondeferred_share: f64,
    /// Resources first discovered through this kind.
    pub contributed: u64,
    /// Share of all attributed new resources.
    pub contribution_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub seeds: u64,
    pub deferred: StratumStats,
    pub nondeferred: StratumStats,
    pub all: StratumStats,
    pub event_kinds: Vec<EventKindRow>,
    /// Non-deduplicated `R_new` insertions per canonical URI.
    pub occurrences: BTreeMap<String, u64>,
    pub total_insertions: u64,
    /// `(rank, cumulative share)` of per-seed new-resource contributions,
    /// largest contributor first.
    pub contribution_cdf: Vec<(u64, f64)>,
    /// Cumulative deduplicated frontier size up to each level.
    pub level_contributions: BTreeMap<u32, u64>,
}

fn contributions_of<'a>(analyses: impl Iterator<Item = &'a PathAnalysis> + Clone) -> BTreeMap<u32, u64> {
    let max_level = analyses
        .clone()
        .flat_map(|a| a.per_level_new.keys().copied())
        .max();
    let mut out = BTreeMap::new();
    let mut frontier: BTreeSet<&str> = BTreeSet::new();
    let mut any = false;
    for a in analyses.clone() {
        any = true;
        frontier.extend(a.root_resources.keys());
    }
    if !any {
        return out;
    }
    out.insert(0, frontier.len() as u64);
    for level in 1..=max_level.unwrap_or(0) {
        for a in analyses.clone() {
            if let Some(set) = a.per_level_new.get(&level) {
                frontier.extend(set.keys());
            }
        }
        out.insert(level, frontier.len() as u64);
    }
    out
}

/// Cumulative deduplicated frontier size per level: `|R0|`, `|R0 + R1|`, ...
pub fn level_contributions(analyses: &[SeedAnalysis]) -> BTreeMap<u32, u64> {
    contributions_of(analyses.iter().map(|s| &s.analysis))
}

/// Corpus frontier split by the level that first contributed each resource.
pub fn corpus_frontier(analyses: &[SeedAnalysis]) -> BTreeMap<u32, ResourceSet> {
    let mut out: BTreeMap<u32, ResourceSet> = BTreeMap::new();
    if analyses.is_empty() {
        return out;
    }
    let mut seen = ResourceSet::new();
    let mut level0 = ResourceSet::new();
    for s in analyses {
        level0.extend_from(&s.analysis.root_resources);
    }
    seen.extend_from(&level0);
    out.insert(0, level0);
    let max_level = analyses
        .iter()
        .flat_map(|s| s.analysis.per_level_new.keys().copied())
        .max()
        .unwrap_or(0);
    for level in 1..=max_level {
        let mut set = ResourceSet::new();
        for s in analyses {
            if let Some(fresh) = s.analysis.per_level_new.get(&level) {
                for r in fresh {
                    if !seen.contains(r) {
                        set.insert(r.clone());
                    }
                }
            }
        }
        seen.extend_from(&set);
        out.insert(level, set);
    }
    out
}

/// Corpus statistics, split into deferred and nondeferred strata.
pub fn aggregate(analyses: &[SeedAnalysis]) -> Result<CorpusStats, AnalysisError> {
    if analyses.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let deferred = analyses
        .iter()
        .filter(|s| s.classification.deferred)
        .map(|s| &s.analysis);
    let nondeferred = analyses
        .iter()
        .filter(|s| !s.classification.deferred)
        .map(|s| &s.analysis);
    let all = analyses.iter().map(|s| &s.analysis);

    let deferred_stats = StratumStats::of(deferred);
    let nondeferred_stats = StratumStats::of(nondeferred);

    let mut buckets: Vec<String> = EventKind::KNOWN.iter().map(|k| k.name().to_string()).collect();
    buckets.push("other".to_string());
    let mut contributed_total = 0u64;
    let mut rows: Vec<EventKindRow> = buckets
        .into_iter()
        .map(|kind| {
            let mut row = EventKindRow {
                deferred_seeds: 0,
                nondeferred_seeds: 0,
                deferred_share: 0.0,
                nondeferred_share: 0.0,
                contributed: 0,
                contribution_share: 0.0,
                kind,
            };
            for s in analyses {
                if s.analysis.kinds_present.contains(&row.kind) {
                    if s.classification.deferred {
                        row.deferred_seeds += 1;
                    } else {
                        row.nondeferred_seeds += 1;
                    }
                }
                row.contributed += s.analysis.kind_contributions.get(&row.kind).copied().unwrap_or(0);
            }
            contributed_total += row.contributed;
            row
        })
        .collect();
    for row in &mut rows {
        row.deferred_share = share(row.deferred_seeds, deferred_stats.seeds);
        row.nondeferred_share = share(row.nondeferred_seeds, nondeferred_stats.seeds);
        row.contribution_share = share(row.contributed, contributed_total);
    }

    let mut occurrences: BTreeMap<String, u64> = BTreeMap::new();
    for s in analyses {
        for (uri, count) in &s.analysis.insertions {
            *occurrences.entry(uri.clone()).or_insert(0) += count;
        }
    }
    let total_insertions = occurrences.values().sum();

    let mut per_seed: Vec<u64> = analyses.iter().map(|s| s.analysis.new_resource_count()).collect();
    per_seed.sort_unstable_by(|a, b| b.cmp(a));
    let contributed: u64 = per_seed.iter().sum();
    let mut contribution_cdf = Vec::new();
    if contributed > 0 {
        let mut running = 0u64;
        for (i, c) in per_seed.iter().enumerate() {
            running += c;
            contribution_cdf.push((i as u64 + 1, running as f64 / contributed as f64));
        }
    }

    Ok(CorpusStats {
        seeds: analyses.len() as u64,
        deferred: deferred_stats,
        nondeferred: nondeferred_stats,
        all: StratumStats::of(all),
        event_kinds: rows,
        occurrences,
        total_insertions,
        contribution_cdf,
        level_contributions: level_contributions(analyses),
    })
}

fn share(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceRanking {
    /// Every URI with at least one insertion, by count descending then URI.
    pub entries: Vec<(String, u64)>,
    pub k: usize,
    pub top_k_total: u64,
    pub total_insertions: u64,
    /// Distinct resources added beyond the corpus `R0` union.
    pub distinct_new: u64,
    /// `top_k_total / total_insertions`
    pub share_of_insertions: f64,
    /// `top_k_total / distinct_new`
    pub share_of_distinct_new: f64,
}

impl OccurrenceRanking {
    pub fn top(&self) -> &[(String, u64)] {
        &self.entries[..self.k.min(self.entries.len())]
    }
}

pub fn occurrence_ranking(analyses: &[SeedAnalysis], k: usize) -> Result<OccurrenceRanking, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::ZeroRank);
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for s in analyses {
        for (uri, count) in &s.analysis.insertions {
            *counts.entry(uri.as_str()).or_insert(0) += count;
        }
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().map(|(u, c)| (u.to_string(), c)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total_insertions: u64 = entries.iter().map(|e| e.1).sum();
    let top_k_total: u64 = entries.iter().take(k).map(|e| e.1).sum();
    let levels = level_contributions(analyses);
    let distinct_new = match (levels.get(&0), levels.values().last()) {
        (Some(base), Some(all)) => all - base,
        _ => 0,
    };
    Ok(OccurrenceRanking {
        entries,
        k,
        top_k_total,
        total_insertions,
        distinct_new,
        share_of_insertions: share(top_k_total, total_insertions),
        share_of_distinct_new: share(top_k_total, distinct_new),
    })
}

/// Ids of states whose `R_new` is non-empty, in tree order.
pub fn contributing_states(tree: &StateTree) -> Vec<StateId> {
    tree.edges
        .iter()
        .filter(|e| {
            !new_resources(&tree.nodes[e.parent.index()].resources, &tree.nodes[e.child.index()].resources)
                .is_empty()
        })
        .map(|e| e.child)
        .collect()
}
