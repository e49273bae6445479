#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use statecrawl_core::driver::fixture_state;
use statecrawl_core::{FixtureEvent, FixtureResource, FixtureState, SiteFixture};

pub const KINDS: &[&str] = &["click", "mouseover", "focus", "keyup", "touchstart"];

/// One step of fixture growth: attach an event to an existing state and,
/// unless `inert`, a child state requesting `resources`.
#[derive(Debug, Clone)]
pub struct Step {
    pub parent: usize,
    pub target: u8,
    pub kind: usize,
    pub inert: bool,
    pub resources: Vec<u16>,
}

pub fn step() -> impl Strategy<Value = Step> {
    (
        any::<usize>(),
        0u8..6,
        0..KINDS.len(),
        prop::bool::weighted(0.1),
        prop::collection::vec(0u16..60, 0..4),
    )
        .prop_map(|(parent, target, kind, inert, resources)| Step {
            parent,
            target,
            kind,
            inert,
            resources,
        })
}

fn resource(n: u16) -> FixtureResource {
    FixtureResource {
        uri: format!("http://r{}.test/res/{n}.js?sid=9#f", n % 3),
        mime: "application/javascript".into(),
        size: i64::from(n) * 10,
    }
}

/// Builds a prefix-closed fixture of at most `max_depth` levels.
pub fn build_fixture(seed: &str, root_resources: &[u16], steps: &[Step], max_depth: usize) -> SiteFixture {
    let mut keys = vec![String::new()];
    let mut states: BTreeMap<String, FixtureState> = BTreeMap::new();
    let mut root = fixture_state(&[], &[]);
    root.resources = root_resources.iter().copied().map(resource).collect();
    states.insert(String::new(), root);
    for s in steps {
        let parent = keys[s.parent % keys.len()].clone();
        let depth = if parent.is_empty() { 0 } else { parent.split('/').count() };
        if depth >= max_depth {
            continue;
        }
        let token = format!("t{}:{}", s.target, KINDS[s.kind]);
        let parent_state = states.get_mut(&parent).unwrap();
        if parent_state
            .events
            .iter()
            .any(|e| format!("{}:{}", e.target, e.kind) == token)
        {
            continue;
        }
        parent_state.events.push(FixtureEvent {
            target: format!("t{}", s.target),
            kind: KINDS[s.kind].into(),
        });
        if s.inert {
            continue;
        }
        let key = if parent.is_empty() { token } else { format!("{parent}/{token}") };
        let mut child = fixture_state(&[], &[]);
        child.resources = s.resources.iter().copied().map(resource).collect();
        states.insert(key.clone(), child);
        keys.push(key);
    }
    SiteFixture {
        seed: seed.into(),
        states,
    }
}

pub fn fixture() -> impl Strategy<Value = SiteFixture> {
    (
        prop::collection::vec(0u16..60, 0..5),
        prop::collection::vec(step(), 0..40),
    )
        .prop_map(|(root, steps)| build_fixture("http://seed.test/", &root, &steps, 3))
}
