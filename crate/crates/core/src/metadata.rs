//! Per-descendant JSON metadata records for WARC metadata entries.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datetime::DateTime;
use crate::event::{InteractionEvent, InteractionScript, TokenError};
use crate::state::{ClientState, StateId, StateTree};

/// Field order is alphabetical so serialization is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescendantMetadataRecord {
    pub comment: String,
    pub id: String,
    /// Events available from the state, as `target:kind` tokens.
    pub map: Vec<String>,
    /// Interaction script as comma-separated `target:kind` tokens.
    #[serde(rename = "pageTimings")]
    pub page_timings: String,
    #[serde(rename = "renderedContent")]
    pub rendered_content: String,
    /// Canonical URIs of `RP` from `s0` to the state.
    #[serde(rename = "renderedElements")]
    pub rendered_elements: Vec<String>,
    #[serde(rename = "startedDateTime")]
    pub started_date_time: DateTime,
    /// URI-R of the seed the state descends from.
    pub title: String,
}

impl DescendantMetadataRecord {
    pub fn script(&self) -> Result<InteractionScript, TokenError> {
        InteractionScript::from_csv(&self.page_timings)
    }

    pub fn events(&self) -> Result<Vec<InteractionEvent>, TokenError> {
        self.map.iter().map(|t| InteractionEvent::from_str(t)).collect()
    }

    pub fn state_id(&self) -> Option<StateId> {
        self.id.strip_prefix('s')?.parse().ok().map(StateId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetadataError {
    UnknownState(StateId),
    /// The tree holds a different state under this id.
    NotInTree(StateId),
}

impl fmt::Display for MetadataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetadataError::UnknownState(id) => write!(f, "state {id} is not in the tree"),
            MetadataError::NotInTree(id) => {
                write!(f, "state {id} does not match the tree's state with that id")
            }
        }
    }
}

impl core::error::Error for MetadataError {}

pub fn emit_record(
    state: &ClientState,
    tree: &StateTree,
    timestamp: DateTime,
) -> Result<DescendantMetadataRecord, MetadataError> {
    let stored = tree.get(state.id).ok_or(MetadataError::UnknownState(state.id))?;
    if stored.script != state.script || stored.dom_digest != state.dom_digest {
        return Err(MetadataError::NotInTree(state.id));
    }
    let path = tree
        .path_to(state.id)
        .map_err(|_| MetadataError::UnknownState(state.id))?;
    Ok(DescendantMetadataRecord {
        comment: format!(
            "level {} state reached by {} interaction(s)",
            state.level,
            state.script.len()
        ),
        id: state.id.to_string(),
        map: state.available_events.iter().map(|e| e.token()).collect(),
        page_timings: state.script.to_csv(),
        rendered_content: state.markup.clone(),
        rendered_elements: path.cumulative.keys().map(ToString::to_string).collect(),
        started_date_time: timestamp,
        title: tree.seed.raw().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventKind;
    use crate::resource::{ResourceRef, ResourceSet};
    use crate::uri::UriR;
    use alloc::vec;

    fn set(uris: &[&str]) -> ResourceSet {
        uris.iter()
            .map(|u| ResourceRef::new(UriR::new(u).unwrap(), "text/plain", 1))
            .collect()
    }

    fn tree() -> StateTree {
        let root = ClientState::new(
            InteractionScript::empty(),
            set(&["http://a.test/x.css"]),
            "<html></html>".into(),
            vec![InteractionEvent::new("A", EventKind::Click)],
        );
        let mut tree = StateTree::new(UriR::new("http://seed.test/").unwrap(), root);
        let a = InteractionEvent::new("A", EventKind::Click);
        let b = InteractionEvent::new("B", EventKind::Click);
        let s1 = tree
            .push_child(
                StateId::ROOT,
                a.clone(),
                ClientState::new(
                    InteractionScript::from_events(vec![a.clone()]),
                    set(&["http://a.test/x.css", "http://a.test/y.png"]),
                    "<html>1</html>".into(),
                    vec![b.clone()],
                ),
            )
            .unwrap();
        tree.push_child(
            s1,
            b.clone(),
            ClientState::new(
                InteractionScript::from_events(vec![a, b]),
                set(&["http://a.test/x.css", "http://a.test/y.png", "http://a.test/z.js"]),
                "<html>2</html>".into(),
                vec![],
            ),
        )
        .unwrap();
        tree
    }

    #[test]
    fn root_record() {
        let tree = StateTree::new(
            UriR::new("http://seed.test/").unwrap(),
            ClientState::new(InteractionScript::empty(), set(&["http://a.test/x.css"]), String::new(), vec![]),
        );
        let r = emit_record(tree.root(), &tree, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(r.page_timings, "");
        assert!(r.map.is_empty());
        assert_eq!(r.rendered_elements, ["http://a.test/x.css"]);
        assert_eq!(r.title, "http://seed.test/");
        assert_eq!(r.state_id(), Some(StateId::ROOT));
    }

    #[test]
    fn level_two_record() {
        let tree = tree();
        let s2 = tree.get(StateId(2)).unwrap();
        let r = emit_record(s2, &tree, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(r.page_timings, "A:click,B:click");
        assert_eq!(r.script().unwrap(), s2.script);
        assert_eq!(r.rendered_elements.len(), 3);
        assert_eq!(r.id, "s2");
        let s1 = tree.get(StateId(1)).unwrap();
        let r1 = emit_record(s1, &tree, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(r1.events().unwrap(), s1.available_events);
    }

    #[test]
    fn foreign_state_is_rejected() {
        let tree = tree();
        let mut other = tree.get(StateId(2)).unwrap().clone();
        other.id = StateId(9);
        assert_eq!(emit_record(&other, &tree, DateTime::UNIX_EPOCH), Err(MetadataError::UnknownState(StateId(9))));
        other.id = StateId(1);
        assert_eq!(emit_record(&other, &tree, DateTime::UNIX_EPOCH), Err(MetadataError::NotInTree(StateId(1))));
    }
}
