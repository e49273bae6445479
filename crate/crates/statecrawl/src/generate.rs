//! Synthetic fixture corpora.
//!
//! [`random_corpus`] grows random trees from breadth/depth/overlap
//! parameters. [`reference_corpus`] builds the 440-seed preset whose corpus
//! totals (strata, descendants per level, contributing states, level
//! contributions, top-10 occurrences, archive holdings) are fixed and only
//! their placement is random.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statecrawl_core::{FixtureEvent, FixtureResource, FixtureState, MockArchive, SiteFixture, UriR};

/// Parameters for [`random_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seeds: usize,
    /// Events at `s0`; deeper states get between 0 and this many.
    pub breadth: u32,
    pub depth: u32,
    /// Probability that a resource comes from a pool shared by all seeds.
    pub overlap: f64,
    /// Maximum requests per state.
    pub resources: u32,
    /// Probability that a declared event leads nowhere.
    pub inert: f64,
    pub rng_seed: u64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            seeds: 10,
            breadth: 3,
            depth: 2,
            overlap: 0.3,
            resources: 4,
            inert: 0.05,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("overlap must lie in [0, 1]")]
    Overlap,
    #[error("inert probability must lie in [0, 1]")]
    Inert,
}

const SHARED_POOL: usize = 30;

const MIMES: &[(&str, &str, u32)] = &[
    ("image/png", "png", 25),
    ("image/gif", "gif", 10),
    ("image/jpeg", "jpg", 15),
    ("application/javascript", "js", 25),
    ("text/css", "css", 10),
    ("application/json", "json", 10),
    ("text/html", "html", 5),
];

const RANDOM_KINDS: &[&str] = &["click", "mouseover", "mousedown", "blur", "change", "keydown", "touchstart"];

struct Picker {
    mimes: WeightedIndex<u32>,
}

impl Picker {
    fn new() -> Self {
        Self {
            mimes: WeightedIndex::new(MIMES.iter().map(|m| m.2)).expect("positive weights"),
        }
    }

    fn mime(&self, rng: &mut impl Rng) -> (&'static str, &'static str) {
        let (mime, ext, _) = MIMES[self.mimes.sample(rng)];
        (mime, ext)
    }
}

fn event(target: String, kind: &str) -> FixtureEvent {
    FixtureEvent {
        target,
        kind: kind.to_string(),
    }
}

fn child_key(parent: &str, e: &FixtureEvent) -> String {
    let token = format!("{}:{}", e.target, e.kind);
    if parent.is_empty() {
        token
    } else {
        format!("{parent}/{token}")
    }
}

pub fn random_corpus(spec: &RandomSpec) -> Result<Vec<SiteFixture>, GenerateError> {
    if !(0.0..=1.0).contains(&spec.overlap) {
        return Err(GenerateError::Overlap);
    }
    if !(0.0..=1.0).contains(&spec.inert) {
        return Err(GenerateError::Inert);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    Ok((0..spec.seeds).map(|i| random_fixture(&mut rng, i, spec)).collect())
}

/// One random site named `http://site{index}.test/`.
pub fn random_fixture(rng: &mut impl Rng, index: usize, spec: &RandomSpec) -> SiteFixture {
    let picker = Picker::new();
    let mut states = BTreeMap::new();
    let mut counter = 0usize;
    let mut pending = vec![(String::new(), 0u32)];
    while let Some((key, level)) = pending.pop() {
        let count = rng.random_range(0..=spec.resources);
        let resources = (0..count)
            .map(|_| {
                let (mime, ext) = picker.mime(rng);
                let uri = if rng.random_bool(spec.overlap) {
                    format!("http://shared.test/lib/{}.{ext}", rng.random_range(0..SHARED_POOL))
                } else {
                    counter += 1;
                    format!("http://site{index}.test/r/{counter}.{ext}?sid={}#v", rng.random_range(0..1000))
                };
                FixtureResource {
                    uri,
                    mime: mime.to_string(),
                    size: rng.random_range(100..5_000),
                }
            })
            .collect();
        let breadth = match level {
            l if l >= spec.depth => 0,
            0 => spec.breadth,
            _ => rng.random_range(0..=spec.breadth),
        };
        let events: Vec<FixtureEvent> = (0..breadth)
            .map(|k| event(format!("e{k}"), RANDOM_KINDS[rng.random_range(0..RANDOM_KINDS.len())]))
            .collect();
        for e in &events {
            if !rng.random_bool(spec.inert) {
                pending.push((child_key(&key, e), level + 1));
            }
        }
        states.insert(key, FixtureState { resources, events });
    }
    SiteFixture {
        seed: format!("http://site{index}.test/"),
        states,
    }
}

/// Corpus totals the reference preset is generated to.
pub mod reference {
    pub const DEFERRED_SEEDS: usize = 303;
    pub const NONDEFERRED_SEEDS: usize = 137;
    pub const DEFERRED_R0: u64 = 7_692;
    pub const NONDEFERRED_R0: u64 = 4_250;
    pub const DEFERRED_LEVEL1: u64 = 6_051;
    pub const DEFERRED_LEVEL2: u64 = 2_468;
    pub const NONDEFERRED_LEVEL1: u64 = 172;
    /// Nondeferred seeds with descendants; the largest has 13.
    pub const NONDEFERRED_WITH_DESCENDANTS: usize = 18;
    pub const NONDEFERRED_MAX_DESCENDANTS: u64 = 13;
    pub const CONTRIBUTING_LEVEL1: usize = 1_850;
    pub const CONTRIBUTING_LEVEL2: usize = 230;
    pub const LEVEL1_NEW: u64 = 45_015;
    pub const LEVEL2_NEW: u64 = 9_363;
    /// Share of deferred seeds whose trees reach level 2.
    pub const DEEP_SEED_SHARE: f64 = 0.47;
    pub const MAX_EVENTS: u64 = 256;
    /// Unarchived resources per level in the preset holdings.
    pub const UNARCHIVED: [u64; 3] = [1_433, 41_414, 8_988];
    /// Top-10 URIs and their occurrence counts.
    pub const PLANTED: [(&str, u64); 10] = [
        ("http://ads.adnet-a.test/AdServer/js/showad.js?kdntuid=1&sid={n}#PIX", 1_782),
        ("http://edge.metrics-b.test/quant.js", 1_656),
        ("http://www.markets-c.test/ajax-cache/market-overview/index-update", 1_629),
        ("http://ads.adnet-a.test/AdServer/js/showad-async.js", 1_503),
        ("http://www.analytics-d.test/analytics.js", 1_330),
        ("http://b.beacon-e.test/beacon.js", 1_291),
        ("http://www.analytics-d.test/ga.js", 1_208),
        ("http://www.pagead-f.test/pagead/drt/ui", 1_151),
        ("http://js.adverify-g.test/moatad.js", 1_112),
        ("http://a.native-h.test/serve/load.js?async=true", 907),
    ];
}

const DEFERRED_KINDS: &[(&str, u32)] = &[
    ("click", 40),
    ("mouseover", 12),
    ("mousedown", 8),
    ("blur", 8),
    ("change", 5),
    ("mouseout", 4),
    ("submit", 3),
    ("unload", 2),
    ("keydown", 2),
    ("focus", 2),
    ("keypress", 2),
    ("focusout", 1),
    ("dblclick", 1),
    ("mouseup", 1),
    ("touchstart", 9),
];

const NONDEFERRED_KINDS: &[(&str, u32)] = &[
    ("click", 50),
    ("mouseover", 20),
    ("change", 15),
    ("mousedown", 10),
    ("touchstart", 5),
];

/// Splits `total` into `weights.len()` parts within `[min, max]`, each unit
/// going to a part drawn with probability proportional to its weight.
pub fn split_weighted(total: u64, weights: &[f64], min: u64, max: u64, rng: &mut impl Rng) -> Vec<u64> {
    let n = weights.len() as u64;
    assert!(n * min <= total && total <= n.saturating_mul(max), "infeasible split");
    let mut parts = vec![min; weights.len()];
    let mut remaining = total - n * min;
    if remaining == 0 {
        return parts;
    }
    let dist = WeightedIndex::new(weights).expect("positive weights");
    let mut open: Vec<usize> = (0..weights.len()).filter(|&i| parts[i] < max).collect();
    while remaining > 0 {
        let mut pick = None;
        for _ in 0..64 {
            let i = dist.sample(rng);
            if parts[i] < max {
                pick = Some(i);
                break;
            }
        }
        let i = match pick {
            Some(i) => i,
            None => {
                open.retain(|&i| parts[i] < max);
                open[rng.random_range(0..open.len())]
            }
        };
        parts[i] += 1;
        remaining -= 1;
    }
    parts
}

fn skewed_weights(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| 0.05 + rng.random::<f64>().powi(3)).collect()
}

struct Res {
    uri: String,
    mime: &'static str,
    size: i64,
}

impl Res {
    fn fixture(&self) -> FixtureResource {
        FixtureResource {
            uri: self.uri.clone(),
            mime: self.mime.to_string(),
            size: self.size,
        }
    }
}

#[derive(Default)]
struct Node {
    kind: &'static str,
    resources: Vec<Res>,
    children: Vec<Node>,
}

struct SeedPlan {
    deferred: bool,
    r0: u64,
    level1: Vec<Node>,
}

/// The reference preset: fixtures plus holdings tuned to the unarchived
/// proportions, with the distinct resources of each level.
pub struct ReferenceCorpus {
    pub fixtures: Vec<SiteFixture>,
    pub holdings: MockArchive,
    /// Deferred flag per fixture, in fixture order.
    pub deferred: Vec<bool>,
    /// Canonical URIs first discovered at each level.
    pub level_uris: [Vec<String>; 3],
}

fn kind(table: &'static [(&'static str, u32)], dist: &WeightedIndex<u32>, rng: &mut impl Rng) -> &'static str {
    table[dist.sample(rng)].0
}

pub fn reference_corpus(rng_seed: u64) -> ReferenceCorpus {
    use reference::*;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picker = Picker::new();
    let deferred_kinds = WeightedIndex::new(DEFERRED_KINDS.iter().map(|k| k.1)).expect("weights");
    let nondeferred_kinds = WeightedIndex::new(NONDEFERRED_KINDS.iter().map(|k| k.1)).expect("weights");

    // Deferred shapes.
    let w = skewed_weights(DEFERRED_SEEDS, &mut rng);
    let d_r0 = split_weighted(DEFERRED_R0, &w, 1, u64::MAX, &mut rng);
    let w = skewed_weights(DEFERRED_SEEDS, &mut rng);
    let d_l1 = split_weighted(DEFERRED_LEVEL1, &w, 1, MAX_EVENTS, &mut rng);
    let mut deferred: Vec<SeedPlan> = (0..DEFERRED_SEEDS)
        .map(|s| SeedPlan {
            deferred: true,
            r0: d_r0[s],
            level1: (0..d_l1[s])
                .map(|_| Node {
                    kind: kind(DEFERRED_KINDS, &deferred_kinds, &mut rng),
                    ..Node::default()
                })
                .collect(),
        })
        .collect();

    // Level-1 slots, flattened as (seed, index).
    let slots: Vec<(usize, usize)> = deferred
        .iter()
        .enumerate()
        .flat_map(|(s, p)| (0..p.level1.len()).map(move |j| (s, j)))
        .collect();

    // Level-2 nodes hang off level-1 states of the "deep" seeds.
    let deep_count = (DEFERRED_SEEDS as f64 * DEEP_SEED_SHARE).round() as usize;
    let mut deep: Vec<usize> = sample(&mut rng, DEFERRED_SEEDS, deep_count).into_vec();
    deep.sort_unstable();
    let hosts: Vec<(usize, usize)> = slots.iter().copied().filter(|(s, _)| deep.binary_search(s).is_ok()).collect();
    let w = skewed_weights(hosts.len(), &mut rng);
    let per_host = split_weighted(DEFERRED_LEVEL2, &w, 0, MAX_EVENTS, &mut rng);
    let mut level2_slots = Vec::new();
    for (&(s, j), &n) in hosts.iter().zip(&per_host) {
        for k in 0..n as usize {
            deferred[s].level1[j].children.push(Node {
                kind: kind(DEFERRED_KINDS, &deferred_kinds, &mut rng),
                ..Node::default()
            });
            level2_slots.push((s, j, k));
        }
    }

    // Contributing level-1 states: each seed's first, then random others.
    let mut contributing: Vec<(usize, usize)> = (0..DEFERRED_SEEDS).map(|s| (s, 0)).collect();
    let others: Vec<(usize, usize)> = slots.iter().copied().filter(|&(_, j)| j > 0).collect();
    for i in sample(&mut rng, others.len(), CONTRIBUTING_LEVEL1 - DEFERRED_SEEDS) {
        contributing.push(others[i]);
    }
    contributing.sort_unstable();

    let mut level_uris: [Vec<String>; 3] = Default::default();
    let canonical = |raw: &str| UriR::new(raw).expect("generated URI").canonical().to_string();

    // Planted URIs, each on as many distinct contributing states as its count.
    for (p, (template, count)) in PLANTED.iter().enumerate() {
        level_uris[1].push(canonical(&template.replace("{n}", "0")));
        for (n, i) in sample(&mut rng, contributing.len(), *count as usize).into_iter().enumerate() {
            let (s, j) = contributing[i];
            deferred[s].level1[j].resources.push(Res {
                uri: template.replace("{n}", &format!("{}", (n * 7 + p) % 997)),
                mime: "application/javascript",
                size: rng.random_range(400..=4_400),
            });
        }
    }

    let fresh = |level: u32, n: u64, rng: &mut ChaCha8Rng, sink: &mut Vec<String>| {
        let (mime, ext) = picker.mime(rng);
        let uri = format!("http://cdn{}.test/l{level}/{n}.{ext}", n % 40);
        sink.push(canonical(&uri));
        Res {
            uri,
            mime,
            size: rng.random_range(400..=4_400),
        }
    };

    let unique1 = LEVEL1_NEW - PLANTED.len() as u64;
    let w = skewed_weights(contributing.len(), &mut rng);
    let per_node = split_weighted(unique1, &w, 1, u64::MAX, &mut rng);
    let mut counter = 0u64;
    for (&(s, j), &n) in contributing.iter().zip(&per_node) {
        for _ in 0..n {
            counter += 1;
            let r = fresh(1, counter, &mut rng, &mut level_uris[1]);
            deferred[s].level1[j].resources.push(r);
        }
    }

    let picked2: Vec<(usize, usize, usize)> = {
        let mut v: Vec<_> = sample(&mut rng, level2_slots.len(), CONTRIBUTING_LEVEL2)
            .into_iter()
            .map(|i| level2_slots[i])
            .collect();
        v.sort_unstable();
        v
    };
    let w = skewed_weights(picked2.len(), &mut rng);
    let per_node = split_weighted(LEVEL2_NEW, &w, 1, u64::MAX, &mut rng);
    let mut counter = 0u64;
    for (&(s, j, k), &n) in picked2.iter().zip(&per_node) {
        for _ in 0..n {
            counter += 1;
            let r = fresh(2, counter, &mut rng, &mut level_uris[2]);
            deferred[s].level1[j].children[k].resources.push(r);
        }
    }

    // Nondeferred shapes.
    let w = skewed_weights(NONDEFERRED_SEEDS, &mut rng);
    let n_r0 = split_weighted(NONDEFERRED_R0, &w, 1, u64::MAX, &mut rng);
    let with_descendants = sample(&mut rng, NONDEFERRED_SEEDS, NONDEFERRED_WITH_DESCENDANTS).into_vec();
    let rest_weights = vec![1.0; NONDEFERRED_WITH_DESCENDANTS - 1];
    let mut n_l1 = vec![0u64; NONDEFERRED_SEEDS];
    n_l1[with_descendants[0]] = NONDEFERRED_MAX_DESCENDANTS;
    let rest = split_weighted(
        NONDEFERRED_LEVEL1 - NONDEFERRED_MAX_DESCENDANTS,
        &rest_weights,
        1,
        NONDEFERRED_MAX_DESCENDANTS,
        &mut rng,
    );
    for (&s, &n) in with_descendants[1..].iter().zip(&rest) {
        n_l1[s] = n;
    }
    let nondeferred: Vec<SeedPlan> = (0..NONDEFERRED_SEEDS)
        .map(|s| SeedPlan {
            deferred: false,
            r0: n_r0[s],
            level1: (0..n_l1[s])
                .map(|_| Node {
                    kind: kind(NONDEFERRED_KINDS, &nondeferred_kinds, &mut rng),
                    ..Node::default()
                })
                .collect(),
        })
        .collect();

    let mut plans: Vec<SeedPlan> = deferred.into_iter().chain(nondeferred).collect();
    plans.shuffle(&mut rng);

    let mut fixtures = Vec::with_capacity(plans.len());
    for (index, plan) in plans.iter_mut().enumerate() {
        let host = format!("site{index:03}.test");
        let root_resources: Vec<Res> = (0..plan.r0)
            .map(|j| {
                let (mime, ext) = picker.mime(&mut rng);
                let uri = if j % 5 == 0 {
                    format!("http://{host}/static/{j}.{ext}?sessionid={}", rng.random_range(0..10_000))
                } else {
                    format!("http://{host}/static/{j}.{ext}")
                };
                level_uris[0].push(canonical(&uri));
                Res {
                    uri,
                    mime,
                    size: rng.random_range(500..=4_700),
                }
            })
            .collect();
        // States without new requests re-request the first s0 resource.
        let replay = root_resources.first().map(Res::fixture);
        let mut states = BTreeMap::new();
        let mut root_events = Vec::new();
        for (j, node) in plan.level1.iter().enumerate() {
            let e = event(format!("e{j}"), node.kind);
            let key = child_key("", &e);
            let mut child_events = Vec::new();
            for (k, grandchild) in node.children.iter().enumerate() {
                let ce = event(format!("c{k}"), grandchild.kind);
                let ckey = child_key(&key, &ce);
                states.insert(
                    ckey,
                    FixtureState {
                        resources: grandchild.resources.iter().map(Res::fixture).collect(),
                        events: Vec::new(),
                    },
                );
                child_events.push(ce);
            }
            let resources = if node.resources.is_empty() {
                replay.iter().cloned().collect()
            } else {
                node.resources.iter().map(Res::fixture).collect()
            };
            states.insert(
                key,
                FixtureState {
                    resources,
                    events: child_events,
                },
            );
            root_events.push(e);
        }
        states.insert(
            String::new(),
            FixtureState {
                resources: root_resources.iter().map(Res::fixture).collect(),
                events: root_events,
            },
        );
        fixtures.push(SiteFixture {
            seed: format!("http://{host}/"),
            states,
        });
    }

    let mut holdings = MockArchive::new();
    for (level, uris) in level_uris.iter().enumerate() {
        let missing: Vec<usize> = sample(&mut rng, uris.len(), UNARCHIVED[level] as usize).into_vec();
        let mut unarchived = vec![false; uris.len()];
        for i in missing {
            unarchived[i] = true;
        }
        for (uri, &miss) in uris.iter().zip(&unarchived) {
            let count = if miss { 0 } else { rng.random_range(1..=40) };
            holdings.insert(&UriR::new(uri).expect("canonical URI"), count);
        }
    }

    ReferenceCorpus {
        deferred: plans.iter().map(|p| p.deferred).collect(),
        fixtures,
        holdings,
        level_uris,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statecrawl_core::SessionPatterns;

    #[test]
    fn split_respects_bounds_and_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let parts = split_weighted(100, &[1.0, 5.0, 0.1], 2, 60, &mut rng);
        assert_eq!(parts.iter().sum::<u64>(), 100);
        assert!(parts.iter().all(|&p| (2..=60).contains(&p)));
        assert_eq!(split_weighted(6, &[1.0, 1.0, 1.0], 2, 2, &mut rng), [2, 2, 2]);
    }

    #[test]
    fn zero_breadth_gives_single_states() {
        let spec = RandomSpec {
            seeds: 5,
            breadth: 0,
            ..RandomSpec::default()
        };
        let corpus = random_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), 5);
        assert!(corpus.iter().all(|f| f.states.len() == 1));
    }

    #[test]
    fn random_fixtures_validate_and_repeat() {
        let spec = RandomSpec {
            seeds: 20,
            breadth: 4,
            depth: 3,
            rng_seed: 9,
            ..RandomSpec::default()
        };
        let a = random_corpus(&spec).unwrap();
        for f in &a {
            f.validate(&SessionPatterns::default()).unwrap();
        }
        assert_eq!(a, random_corpus(&spec).unwrap());
        assert_ne!(a, random_corpus(&RandomSpec { rng_seed: 10, ..spec.clone() }).unwrap());
        assert_eq!(
            random_corpus(&RandomSpec { overlap: 1.5, ..spec }),
            Err(GenerateError::Overlap)
        );
    }

    #[test]
    fn reference_corpus_shape() {
        let corpus = reference_corpus(7);
        assert_eq!(corpus.fixtures.len(), 440);
        assert_eq!(corpus.deferred.iter().filter(|d| **d).count(), 303);
        let lens: Vec<usize> = corpus.level_uris.iter().map(Vec::len).collect();
        assert_eq!(lens, [11_942, 45_015, 9_363]);
        assert_eq!(corpus.holdings.len(), 11_942 + 45_015 + 9_363);
        for f in &corpus.fixtures {
            f.validate(&SessionPatterns::default()).unwrap();
            assert!(f.states[""].events.len() <= 256);
        }
        let descendants: usize = corpus.fixtures.iter().map(|f| f.states.len() - 1).sum();
        assert_eq!(descendants, 8_691);
    }
}
