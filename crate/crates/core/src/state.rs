//! Client states, the descendant tree, and the resource-set relations over
//! them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::event::{InteractionEvent, InteractionScript};
use crate::resource::ResourceSet;
use crate::uri::UriR;

/// Index of a state within its tree. The root is always `StateId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl StateId {
    pub const ROOT: StateId = StateId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Why a state was not expanded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    /// More candidate events than the explosion threshold (pixel-grid style
    /// listeners); none of them were executed.
    InteractionExplosion { candidates: u64, threshold: u64 },
}

/// A crawl limit that cut exploration short.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "limit", rename_all = "snake_case")]
pub enum LimitBreach {
    /// Only the first `explored` of `available` events were extended.
    EventsTruncated {
        state: StateId,
        available: u64,
        explored: u64,
    },
    /// The state budget ran out; `pending` extensions of `state` were dropped.
    StateBudget { state: StateId, pending: u64 },
    /// `state` sits at the depth limit with `pending` unexplored events.
    DepthLimit { state: StateId, pending: u64 },
    /// See [`SkipReason::InteractionExplosion`].
    InteractionExplosion {
        state: StateId,
        candidates: u64,
        threshold: u64,
    },
}

/// A client-side state `s_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    pub id: StateId,
    pub level: u32,
    pub script: InteractionScript,
    /// Cumulative requests observed from load through this state.
    pub resources: ResourceSet,
    /// Hex SHA-256 of `markup`. Diagnostic only.
    pub dom_digest: String,
    pub markup: String,
    pub available_events: Vec<InteractionEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<SkipReason>,
}

impl ClientState {
    pub fn new(
        script: InteractionScript,
        resources: ResourceSet,
        markup: String,
        available_events: Vec<InteractionEvent>,
    ) -> Self {
        Self {
            id: StateId::ROOT,
            level: script.len() as u32,
            dom_digest: digest_markup(&markup),
            script,
            resources,
            markup,
            available_events,
            skipped: None,
        }
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }
}

pub fn digest_markup(markup: &str) -> String {
    hex::encode(Sha256::digest(markup.as_bytes()))
}

/// Tree edge: `parent --event--> child`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: StateId,
    pub event: InteractionEvent,
    pub child: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    Empty,
    BadRoot,
    IdMismatch { position: usize, id: StateId },
    EdgeCount { nodes: usize, edges: usize },
    EdgeOrder { position: usize },
    UnknownState(StateId),
    Level { state: StateId },
    Script { state: StateId },
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::Empty => f.write_str("tree has no root"),
            TreeError::BadRoot => f.write_str("root must have level 0 and an empty script"),
            TreeError::IdMismatch { position, id } => {
                write!(f, "node at position {position} carries id {id}")
            }
            TreeError::EdgeCount { nodes, edges } => {
                write!(f, "{nodes} nodes need {} edges, found {edges}", nodes - 1)
            }
            TreeError::EdgeOrder { position } => {
                write!(f, "edge {position} does not lead to node {}", position + 1)
            }
            TreeError::UnknownState(id) => write!(f, "state {id} is not in the tree"),
            TreeError::Level { state } => write!(f, "state {state} level disagrees with its script or parent"),
            TreeError::Script { state } => {
                write!(f, "state {state} script is not its parent's script plus the edge event")
            }
        }
    }
}

impl core::error::Error for TreeError {}

/// Descendant tree rooted at `s0`.
///
/// Nodes are stored in discovery order and `edges[k]` is the unique incoming
/// edge of node `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTree {
    pub seed: UriR,
    pub nodes: Vec<ClientState>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub breaches: Vec<LimitBreach>,
    /// Candidate scripts dropped because an identical script was already in
    /// the tree.
    #[serde(default)]
    pub duplicate_scripts: u64,
}

impl StateTree {
    pub fn new(seed: UriR, mut root: ClientState) -> Self {
        root.id = StateId::ROOT;
        root.level = 0;
        Self {
            seed,
            nodes: vec![root],
            edges: Vec::new(),
            breaches: Vec::new(),
            duplicate_scripts: 0,
        }
    }

    pub fn root(&self) -> &ClientState {
        &self.nodes[0]
    }

    pub fn get(&self, id: StateId) -> Option<&ClientState> {
        self.nodes.get(id.index())
    }

    pub fn get_mut(&mut self, id: StateId) -> Option<&mut ClientState> {
        self.nodes.get_mut(id.index())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Non-root states.
    pub fn descendant_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Appends `state` as a child of `parent` reached by `event`. The state's
    /// id and level are assigned here.
    pub fn push_child(
        &mut self,
        parent: StateId,
        event: InteractionEvent,
        mut state: ClientState,
    ) -> Result<StateId, TreeError> {
        let parent_level = self
            .get(parent)
            .ok_or(TreeError::UnknownState(parent))?
            .level;
        let id = StateId(self.nodes.len() as u32);
        state.id = id;
        state.level = parent_level + 1;
        self.nodes.push(state);
        self.edges.push(Edge {
            parent,
            event,
            child: id,
        });
        Ok(id)
    }

    pub fn incoming(&self, id: StateId) -> Option<&Edge> {
        if id == StateId::ROOT {
            return None;
        }
        self.edges.get(id.index() - 1)
    }

    pub fn parent(&self, id: StateId) -> Option<StateId> {
        self.incoming(id).map(|e| e.parent)
    }

    /// Children lists indexed by parent id, in discovery order.
    pub fn children_index(&self) -> Vec<Vec<StateId>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for edge in &self.edges {
            children[edge.parent.index()].push(edge.child);
        }
        children
    }

    /// Ids from the root down to `id`.
    pub fn root_path(&self, id: StateId) -> Result<Vec<StateId>, TreeError> {
        self.get(id).ok_or(TreeError::UnknownState(id))?;
        let mut ids = vec![id];
        let mut cursor = id;
        while let Some(parent) = self.parent(cursor) {
            ids.push(parent);
            cursor = parent;
        }
        ids.reverse();
        Ok(ids)
    }

    pub fn path_to(&self, id: StateId) -> Result<StatePath, TreeError> {
        let states = self.root_path(id)?;
        let mut cumulative = ResourceSet::new();
        for s in &states {
            cumulative.extend_from(&self.nodes[s.index()].resources);
        }
        Ok(StatePath { states, cumulative })
    }

    /// Structural audit: ids, edge order, levels and scripts.
    pub fn audit(&self) -> Result<(), TreeError> {
        let root = self.nodes.first().ok_or(TreeError::Empty)?;
        if root.level != 0 || !root.script.is_empty() {
            return Err(TreeError::BadRoot);
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return Err(TreeError::EdgeCount {
                nodes: self.nodes.len(),
                edges: self.edges.len(),
            });
        }
        for (position, node) in self.nodes.iter().enumerate() {
            if node.id.index() != position {
                return Err(TreeError::IdMismatch {
                    position,
                    id: node.id,
                });
            }
            if node.level as usize != node.script.len() {
                return Err(TreeError::Level { state: node.id });
            }
        }
        for (position, edge) in self.edges.iter().enumerate() {
            if edge.child.index() != position + 1 || edge.parent >= edge.child {
                return Err(TreeError::EdgeOrder { position });
            }
            let parent = &self.nodes[edge.parent.index()];
            let child = &self.nodes[edge.child.index()];
            if child.level != parent.level + 1 {
                return Err(TreeError::Level { state: child.id });
            }
            if child.script.parent().as_ref() != Some(&parent.script)
                || child.script.last() != Some(&edge.event)
            {
                return Err(TreeError::Script { state: child.id });
            }
        }
        Ok(())
    }
}

/// States `s0 .. s_n` along tree edges with their cumulative resources `RP`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePath {
    pub states: Vec<StateId>,
    pub cumulative: ResourceSet,
}

impl StatePath {
    pub fn terminal(&self) -> StateId {
        *self.states.last().unwrap_or(&StateId::ROOT)
    }
}

/// Union of `R_n` over the states of `path`.
pub fn path_resources(tree: &StateTree, path: &StatePath) -> Result<ResourceSet, TreeError> {
    let mut out = ResourceSet::new();
    for id in &path.states {
        let state = tree.get(*id).ok_or(TreeError::UnknownState(*id))?;
        out.extend_from(&state.resources);
    }
    Ok(out)
}

/// Resources in `child` that are absent from `parent`.
pub fn new_resources(parent: &ResourceSet, child: &ResourceSet) -> ResourceSet {
    child.difference(parent)
}

/// States are equivalent when they require the same canonical resource keys.
pub fn states_equivalent(a: &ClientState, b: &ClientState) -> bool {
    a.resources.same_keys(&b.resources)
}

/// Scripts are equivalent when they perform identical actions in identical
/// order.
pub fn scripts_equivalent(a: &InteractionScript, b: &InteractionScript) -> bool {
    a.events == b.events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventKind;
    use crate::resource::ResourceRef;
    use alloc::string::ToString;

    fn set(uris: &[&str]) -> ResourceSet {
        uris.iter()
            .map(|u| ResourceRef::new(UriR::new(&alloc::format!("http://r.test/{u}")).unwrap(), "x", 1))
            .collect()
    }

    fn state(script: &str, uris: &[&str]) -> ClientState {
        ClientState::new(
            InteractionScript::from_key(script).unwrap(),
            set(uris),
            String::new(),
            Vec::new(),
        )
    }

    /// Root with two clicks (V_a, V_b); V_a has two further events (V_c, V_d)
    /// that need nothing beyond V_a.
    fn fig3_tree() -> StateTree {
        let seed = UriR::new("http://seed.test/").unwrap();
        let mut tree = StateTree::new(seed, state("", &["page.css"]));
        let va = tree
            .push_child(
                StateId::ROOT,
                InteractionEvent::new("a", EventKind::Click),
                state("a:click", &["page.css", "img.png"]),
            )
            .unwrap();
        tree.push_child(
            StateId::ROOT,
            InteractionEvent::new("b", EventKind::Click),
            state("b:click", &["page.css", "b.json"]),
        )
        .unwrap();
        tree.push_child(
            va,
            InteractionEvent::new("c", EventKind::Click),
            state("a:click/c:click", &["page.css", "img.png"]),
        )
        .unwrap();
        tree.push_child(
            va,
            InteractionEvent::new("d", EventKind::Mouseover),
            state("a:click/d:mouseover", &["img.png", "page.css"]),
        )
        .unwrap();
        tree
    }

    #[test]
    fn fig3_equivalences() {
        let tree = fig3_tree();
        tree.audit().unwrap();
        let (va, vc, vd) = (&tree.nodes[1], &tree.nodes[3], &tree.nodes[4]);
        assert!(states_equivalent(va, vc));
        assert!(states_equivalent(vc, vd));
        assert!(states_equivalent(va, vd));
        assert!(!states_equivalent(va, &tree.nodes[2]));
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.descendant_count(), 4);
    }

    #[test]
    fn set_equivalence_examples() {
        let a = state("", &["x", "y"]);
        let b = state("", &["y", "x"]);
        assert!(states_equivalent(&a, &b));
        let c = state("", &["x"]);
        let d = state("", &["x", "z"]);
        assert!(!states_equivalent(&c, &d));
    }

    #[test]
    fn script_equivalence_examples() {
        let empty = InteractionScript::empty();
        assert!(scripts_equivalent(&empty, &empty.clone()));
        let ab = InteractionScript::from_key("A:click/B:click").unwrap();
        let ba = InteractionScript::from_key("B:click/A:click").unwrap();
        assert!(!scripts_equivalent(&ab, &ba));
        let a1 = InteractionScript::from_key("A:click").unwrap();
        let a2 = InteractionScript::from_key("A:click").unwrap();
        assert!(scripts_equivalent(&a1, &a2));
    }

    #[test]
    fn path_resources_examples() {
        let seed = UriR::new("http://seed.test/").unwrap();
        let single = StateTree::new(seed.clone(), state("", &["a", "b"]));
        let path = single.path_to(StateId::ROOT).unwrap();
        assert_eq!(path_resources(&single, &path).unwrap(), set(&["a", "b"]));

        let mut chain = StateTree::new(seed, state("", &["a"]));
        let s1 = chain
            .push_child(StateId::ROOT, InteractionEvent::new("x", EventKind::Click), state("x:click", &["a", "b"]))
            .unwrap();
        let s2 = chain
            .push_child(s1, InteractionEvent::new("y", EventKind::Click), state("x:click/y:click", &["c"]))
            .unwrap();
        let path = chain.path_to(s2).unwrap();
        assert_eq!(path.states, [StateId(0), StateId(1), StateId(2)]);
        assert_eq!(path_resources(&chain, &path).unwrap(), set(&["a", "b", "c"]));
        assert_eq!(path.cumulative, set(&["a", "b", "c"]));
    }

    #[test]
    fn new_resources_examples() {
        assert!(new_resources(&set(&["a", "b"]), &set(&["a", "b"])).is_empty());
        assert_eq!(new_resources(&set(&["a"]), &set(&["a", "b", "c"])), set(&["b", "c"]));
    }

    #[test]
    fn audit_catches_script_mismatch() {
        let mut tree = fig3_tree();
        tree.nodes[3].script = InteractionScript::from_key("b:click/c:click").unwrap();
        assert_eq!(tree.audit(), Err(TreeError::Script { state: StateId(3) }));

        let mut tree = fig3_tree();
        tree.nodes[2].level = 2;
        assert!(tree.audit().is_err());

        let mut tree = fig3_tree();
        tree.edges.pop();
        assert!(matches!(tree.audit(), Err(TreeError::EdgeCount { .. })));
        assert!(TreeError::UnknownState(StateId(9)).to_string().contains("s9"));
    }
}
