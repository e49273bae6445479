//! Client-side events and interaction scripts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Separator between an event target and its kind in a token (`target:kind`).
pub const KIND_SEPARATOR: char = ':';
/// Separator between tokens in a script key.
pub const KEY_SEPARATOR: char = '/';
/// Separator between tokens in the CSV form of a script.
pub const CSV_SEPARATOR: char = ',';

const RESERVED: [char; 3] = [KIND_SEPARATOR, KEY_SEPARATOR, CSV_SEPARATOR];

/// DOM event types observed on crawled pages; anything else is `Other`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Click,
    Mouseover,
    Mousedown,
    Blur,
    Change,
    Mouseout,
    Submit,
    Unload,
    Keydown,
    Focus,
    Keypress,
    Focusout,
    Dblclick,
    Mouseup,
    Other(String),
}

impl EventKind {
    pub const KNOWN: [EventKind; 14] = [
        EventKind::Click,
        EventKind::Mouseover,
        EventKind::Mousedown,
        EventKind::Blur,
        EventKind::Change,
        EventKind::Mouseout,
        EventKind::Submit,
        EventKind::Unload,
        EventKind::Keydown,
        EventKind::Focus,
        EventKind::Keypress,
        EventKind::Focusout,
        EventKind::Dblclick,
        EventKind::Mouseup,
    ];

    /// Maps an event name (with or without an `on` prefix) to a kind.
    pub fn from_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        let bare = lower.strip_prefix("on").unwrap_or(&lower);
        match bare {
            "click" => EventKind::Click,
            "mouseover" => EventKind::Mouseover,
            "mousedown" => EventKind::Mousedown,
            "blur" => EventKind::Blur,
            "change" => EventKind::Change,
            "mouseout" => EventKind::Mouseout,
            "submit" => EventKind::Submit,
            "unload" => EventKind::Unload,
            "keydown" => EventKind::Keydown,
            "focus" => EventKind::Focus,
            "keypress" => EventKind::Keypress,
            "focusout" => EventKind::Focusout,
            "dblclick" => EventKind::Dblclick,
            "mouseup" => EventKind::Mouseup,
            _ => EventKind::Other(name.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            EventKind::Click => "click",
            EventKind::Mouseover => "mouseover",
            EventKind::Mousedown => "mousedown",
            EventKind::Blur => "blur",
            EventKind::Change => "change",
            EventKind::Mouseout => "mouseout",
            EventKind::Submit => "submit",
            EventKind::Unload => "unload",
            EventKind::Keydown => "keydown",
            EventKind::Focus => "focus",
            EventKind::Keypress => "keypress",
            EventKind::Focusout => "focusout",
            EventKind::Dblclick => "dblclick",
            EventKind::Mouseup => "mouseup",
            EventKind::Other(name) => name,
        }
    }

    /// Histogram bucket: known kinds by name, everything else as `other`.
    pub fn bucket(&self) -> &str {
        match self {
            EventKind::Other(_) => "other",
            known => known.name(),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for EventKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Ok(EventKind::from_name(&name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenError {
    EmptyTarget,
    EmptyKind,
    Reserved { field: &'static str, value: String },
    MissingSeparator(String),
}

impl fmt::Display for TokenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenError::EmptyTarget => f.write_str("event target is empty"),
            TokenError::EmptyKind => f.write_str("event kind is empty"),
            TokenError::Reserved { field, value } => {
                write!(f, "event {field} {value:?} contains one of ':', '/', ','")
            }
            TokenError::MissingSeparator(token) => {
                write!(f, "event token {token:?} is not of the form target:kind")
            }
        }
    }
}

impl core::error::Error for TokenError {}

/// One client-side event bound to a page element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub target: String,
    pub kind: EventKind,
}

impl InteractionEvent {
    pub fn new(target: impl Into<String>, kind: EventKind) -> Self {
        Self {
            target: target.into(),
            kind,
        }
    }

    /// Checks that the event can be written as a token.
    pub fn validate(&self) -> Result<(), TokenError> {
        if self.target.is_empty() {
            return Err(TokenError::EmptyTarget);
        }
        if self.kind.name().is_empty() {
            return Err(TokenError::EmptyKind);
        }
        if self.target.contains(RESERVED) {
            return Err(TokenError::Reserved {
                field: "target",
                value: self.target.clone(),
            });
        }
        if self.kind.name().contains(RESERVED) {
            return Err(TokenError::Reserved {
                field: "kind",
                value: self.kind.name().to_string(),
            });
        }
        Ok(())
    }

    /// `target:kind`
    pub fn token(&self) -> String {
        let mut token = String::with_capacity(self.target.len() + 1 + self.kind.name().len());
        token.push_str(&self.target);
        token.push(KIND_SEPARATOR);
        token.push_str(self.kind.name());
        token
    }
}

impl FromStr for InteractionEvent {
    type Err = TokenError;

    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let (target, kind) = token
            .split_once(KIND_SEPARATOR)
            .ok_or_else(|| TokenError::MissingSeparator(token.to_string()))?;
        let event = InteractionEvent::new(target, EventKind::from_name(kind));
        event.validate()?;
        Ok(event)
    }
}

impl fmt::Display for InteractionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.target, KIND_SEPARATOR, self.kind)
    }
}

/// Ordered events leading from `s0` to a descendant. The empty script is `s0`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionScript {
    pub events: Vec<InteractionEvent>,
}

impl InteractionScript {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<InteractionEvent>) -> Self {
        Self { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn extended(&self, event: InteractionEvent) -> Self {
        let mut events = Vec::with_capacity(self.events.len() + 1);
        events.extend_from_slice(&self.events);
        events.push(event);
        Self { events }
    }

    pub fn last(&self) -> Option<&InteractionEvent> {
        self.events.last()
    }

    /// The script without its final event; `None` for `s0`.
    pub fn parent(&self) -> Option<Self> {
        let (_, head) = self.events.split_last()?;
        Some(Self {
            events: head.to_vec(),
        })
    }

    /// All proper prefixes, shortest first, starting with the empty script.
    pub fn prefixes(&self) -> impl Iterator<Item = InteractionScript> + '_ {
        (0..self.events.len()).map(move |n| Self {
            events: self.events[..n].to_vec(),
        })
    }

    /// Fixture key: tokens joined by `/`; `""` for `s0`.
    pub fn key(&self) -> String {
        self.join(KEY_SEPARATOR)
    }

    pub fn from_key(key: &str) -> Result<Self, TokenError> {
        Self::split(key, KEY_SEPARATOR)
    }

    /// CSV form used in metadata records: tokens joined by `,`.
    pub fn to_csv(&self) -> String {
        self.join(CSV_SEPARATOR)
    }

    pub fn from_csv(csv: &str) -> Result<Self, TokenError> {
        Self::split(csv, CSV_SEPARATOR)
    }

    fn join(&self, separator: char) -> String {
        let mut out = String::new();
        for (i, event) in self.events.iter().enumerate() {
            if i > 0 {
                out.push(separator);
            }
            out.push_str(&event.token());
        }
        out
    }

    fn split(text: &str, separator: char) -> Result<Self, TokenError> {
        if text.is_empty() {
            return Ok(Self::empty());
        }
        let events = text
            .split(separator)
            .map(InteractionEvent::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { events })
    }
}

impl fmt::Display for InteractionScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        f.write_str(&self.to_csv())?;
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_by_name() {
        for kind in EventKind::KNOWN {
            assert_eq!(EventKind::from_name(kind.name()), kind);
        }
        assert_eq!(EventKind::from_name("onClick"), EventKind::Click);
        assert_eq!(
            EventKind::from_name("touchstart"),
            EventKind::Other("touchstart".into())
        );
        assert_eq!(EventKind::Other("wheel".into()).bucket(), "other");
    }

    #[test]
    fn key_and_csv_forms() {
        let script = InteractionScript::from_events(alloc::vec![
            InteractionEvent::new("A", EventKind::Click),
            InteractionEvent::new("B", EventKind::Click),
        ]);
        assert_eq!(script.key(), "A:click/B:click");
        assert_eq!(script.to_csv(), "A:click,B:click");
        assert_eq!(InteractionScript::from_csv("A:click,B:click").unwrap(), script);
        assert_eq!(InteractionScript::from_key(&script.key()).unwrap(), script);
        assert_eq!(InteractionScript::from_key("").unwrap(), InteractionScript::empty());
    }

    #[test]
    fn prefixes_and_parent() {
        let script = InteractionScript::from_key("a:click/b:blur/c:focus").unwrap();
        let prefixes: Vec<String> = script.prefixes().map(|p| p.key()).collect();
        assert_eq!(prefixes, ["", "a:click", "a:click/b:blur"]);
        assert_eq!(script.parent().unwrap().key(), "a:click/b:blur");
        assert_eq!(InteractionScript::empty().parent(), None);
    }

    #[test]
    fn malformed_tokens() {
        assert!(matches!(
            InteractionScript::from_key("noseparator"),
            Err(TokenError::MissingSeparator(_))
        ));
        assert_eq!(
            InteractionScript::from_key(":click"),
            Err(TokenError::EmptyTarget)
        );
        assert_eq!(InteractionScript::from_key("a:"), Err(TokenError::EmptyKind));
        assert!(InteractionEvent::new("a,b", EventKind::Click).validate().is_err());
        assert!(InteractionEvent::new("a", EventKind::Other("x:y".into()))
            .validate()
            .is_err());
    }
}
