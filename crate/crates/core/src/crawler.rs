//! Descendant-tree construction.
//!
//! Starting from `s0`, every available event extends the current script by
//! one event; each new script is executed once (a script already in the tree
//! is dropped) and the reached state becomes a child. Traversal is
//! depth-first in enumeration order, so a fixed driver yields a fixed tree.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::driver::{DriverError, PageDriver};
use crate::event::{InteractionEvent, InteractionScript};
use crate::state::{
    new_resources, ClientState, LimitBreach, SkipReason, StateId, StateTree, TreeError,
};
use crate::uri::UriR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlLimits {
    pub max_depth: u32,
    pub max_events_per_state: u32,
    pub max_states_per_seed: u32,
    /// A state with more candidate events than this is not expanded at all.
    pub explosion_threshold: u64,
}

impl Default for CrawlLimits {
    fn default() -> Self {
        Self {
            max_depth: 3,
            max_events_per_state: 256,
            max_states_per_seed: 10_000,
            explosion_threshold: 10_000,
        }
    }
}

impl CrawlLimits {
    pub fn validate(&self) -> Result<(), CrawlError> {
        let zero = if self.max_depth == 0 {
            Some("max_depth")
        } else if self.max_events_per_state == 0 {
            Some("max_events_per_state")
        } else if self.max_states_per_seed == 0 {
            Some("max_states_per_seed")
        } else if self.explosion_threshold == 0 {
            Some("explosion_threshold")
        } else {
            None
        };
        match zero {
            Some(name) => Err(CrawlError::InvalidLimits(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedClassification {
    pub deferred: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_event: Option<InteractionEvent>,
}

impl SeedClassification {
    pub fn nondeferred() -> Self {
        Self {
            deferred: false,
            trigger_event: None,
        }
    }

    pub fn deferred(trigger: InteractionEvent) -> Self {
        Self {
            deferred: true,
            trigger_event: Some(trigger),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrawlError {
    Driver(DriverError),
    Tree(TreeError),
    InvalidLimits(&'static str),
}

impl fmt::Display for CrawlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrawlError::Driver(e) => write!(f, "{e}"),
            CrawlError::Tree(e) => write!(f, "{e}"),
            CrawlError::InvalidLimits(name) => write!(f, "crawl limit {name} must be positive"),
        }
    }
}

impl core::error::Error for CrawlError {}

impl From<DriverError> for CrawlError {
    fn from(e: DriverError) -> Self {
        CrawlError::Driver(e)
    }
}

impl From<TreeError> for CrawlError {
    fn from(e: TreeError) -> Self {
        CrawlError::Tree(e)
    }
}

/// Candidate one-event extensions of `state`.
pub fn interaction_frontier_size(state: &ClientState) -> usize {
    state.available_events.len()
}

/// Deferred iff some single event from `s0` requests a resource `s0` did not.
/// The trigger is the first such event in enumeration order.
pub fn classify<D: PageDriver>(seed: &UriR, driver: &mut D) -> Result<SeedClassification, CrawlError> {
    let handle = driver.load(seed)?;
    for event in driver.enumerate_events(&handle) {
        let script = InteractionScript::from_events(alloc::vec![event.clone()]);
        let (_, observed) = driver.execute(&handle, &script)?;
        if !new_resources(&handle.observed_requests, &observed).is_empty() {
            return Ok(SeedClassification::deferred(event));
        }
    }
    Ok(SeedClassification::nondeferred())
}

/// Same rule as [`classify`], read off an already-built tree's level-1 states.
pub fn classify_tree(tree: &StateTree) -> SeedClassification {
    let root = tree.root();
    tree.edges
        .iter()
        .filter(|e| e.parent == StateId::ROOT)
        .find(|e| !new_resources(&root.resources, &tree.nodes[e.child.index()].resources).is_empty())
        .map(|e| SeedClassification::deferred(e.event.clone()))
        .unwrap_or_else(SeedClassification::nondeferred)
}

/// How many of a state's events to extend, recording any limit that applies.
fn expansion(tree: &mut StateTree, id: StateId, limits: &CrawlLimits) -> usize {
    let state = &tree.nodes[id.index()];
    let available = interaction_frontier_size(state) as u64;
    if available == 0 {
        return 0;
    }
    if state.level >= limits.max_depth {
        tree.breaches.push(LimitBreach::DepthLimit {
            state: id,
            pending: available,
        });
        return 0;
    }
    if available > limits.explosion_threshold {
        tree.nodes[id.index()].skipped = Some(SkipReason::InteractionExplosion {
            candidates: available,
            threshold: limits.explosion_threshold,
        });
        tree.breaches.push(LimitBreach::InteractionExplosion {
            state: id,
            candidates: available,
            threshold: limits.explosion_threshold,
        });
        return 0;
    }
    let explored = available.min(u64::from(limits.max_events_per_state));
    if explored < available {
        tree.breaches.push(LimitBreach::EventsTruncated {
            state: id,
            available,
            explored,
        });
    }
    explored as usize
}

/// Builds the descendant tree of `seed`.
pub fn build_tree<D: PageDriver>(
    seed: &UriR,
    driver: &mut D,
    limits: &CrawlLimits,
) -> Result<StateTree, CrawlError> {
    limits.validate()?;
    let handle = driver.load(seed)?;
    let root = ClientState::new(
        InteractionScript::empty(),
        handle.observed_requests.clone(),
        handle.markup.clone(),
        driver.enumerate_events(&handle),
    );
    let mut tree = StateTree::new(handle.seed.clone(), root);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    seen.insert(String::new());

    // (state, next event index, events to extend)
    let mut stack: Vec<(StateId, usize, usize)> = Vec::new();
    let end = expansion(&mut tree, StateId::ROOT, limits);
    if end > 0 {
        stack.push((StateId::ROOT, 0, end));
    }

    while let Some(top) = stack.last_mut() {
        let (id, next, end) = *top;
        if next == end {
            stack.pop();
            continue;
        }
        top.1 += 1;

        let parent = &tree.nodes[id.index()];
        let event = parent.available_events[next].clone();
        let script = parent.script.extended(event.clone());
        if !seen.insert(script.key()) {
            tree.duplicate_scripts += 1;
            continue;
        }
        if tree.len() >= limits.max_states_per_seed as usize {
            for &(state, next, end) in stack.iter() {
                // `next` was already advanced past the dropped candidate on top.
                let pending = if state == id { end - next + 1 } else { end - next };
                if pending > 0 {
                    tree.breaches.push(LimitBreach::StateBudget {
                        state,
                        pending: pending as u64,
                    });
                }
            }
            break;
        }

        let (reached, observed) = driver.execute(&handle, &script)?;
        let events = driver.enumerate_events(&reached);
        let child = ClientState::new(script, observed, reached.markup, events);
        let child_id = tree.push_child(id, event, child)?;
        let end = expansion(&mut tree, child_id, limits);
        if end > 0 {
            stack.push((child_id, 0, end));
        }
    }
    Ok(tree)
}
