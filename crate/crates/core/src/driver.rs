//! Page drivers: load a URI-R, list its event listeners, replay interaction
//! scripts and report the requests they trigger.
//!
//! [`SimulatedDriver`] answers from declarative [`SiteFixture`]s keyed by
//! interaction script, so identical scripts always reach identical states. A
//! browser-backed driver implements the same trait.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::event::{EventKind, InteractionEvent, InteractionScript, TokenError};
use crate::resource::{ResourceRef, ResourceSet};
use crate::uri::{SessionPatterns, UriError, UriR};

/// One site: the seed and every reachable state keyed by script key
/// (`target:kind` tokens joined by `/`, `""` for `s0`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteFixture {
    pub seed: String,
    pub states: BTreeMap<String, FixtureState>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureState {
    /// Requests issued on reaching this state (not cumulative).
    pub resources: Vec<FixtureResource>,
    pub events: Vec<FixtureEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureResource {
    pub uri: String,
    pub mime: String,
    pub size: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEvent {
    pub target: String,
    pub kind: String,
}

impl FixtureEvent {
    pub fn to_event(&self) -> InteractionEvent {
        InteractionEvent::new(self.target.clone(), EventKind::from_name(&self.kind))
    }
}

impl From<&InteractionEvent> for FixtureEvent {
    fn from(event: &InteractionEvent) -> Self {
        Self {
            target: event.target.clone(),
            kind: event.kind.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureError {
    BadSeed(UriError),
    MissingRoot,
    BadKey { key: String, error: TokenError },
    MissingParent { key: String, parent: String },
    UndeclaredTransition { key: String },
    BadEvent { key: String, error: TokenError },
    DuplicateEvent { key: String, token: String },
    BadResource { key: String, error: UriError },
    NegativeSize { key: String, uri: String, size: i64 },
}

impl fmt::Display for FixtureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixtureError::BadSeed(e) => write!(f, "fixture seed: {e}"),
            FixtureError::MissingRoot => f.write_str("fixture has no \"\" state (s0)"),
            FixtureError::BadKey { key, error } => write!(f, "state key {key:?}: {error}"),
            FixtureError::MissingParent { key, parent } => {
                write!(f, "state {key:?} extends {parent:?}, which is not in the fixture")
            }
            FixtureError::UndeclaredTransition { key } => {
                write!(f, "state {key:?} is reached by an event its parent does not declare")
            }
            FixtureError::BadEvent { key, error } => write!(f, "state {key:?}: {error}"),
            FixtureError::DuplicateEvent { key, token } => {
                write!(f, "state {key:?} declares event {token:?} twice")
            }
            FixtureError::BadResource { key, error } => write!(f, "state {key:?}: {error}"),
            FixtureError::NegativeSize { key, uri, size } => {
                write!(f, "state {key:?}: resource {uri} has negative size {size}")
            }
        }
    }
}

impl core::error::Error for FixtureError {}

#[derive(Debug, Clone)]
struct CompiledState {
    requests: Vec<ResourceRef>,
    events: Vec<InteractionEvent>,
}

#[derive(Debug, Clone)]
struct CompiledFixture {
    seed: UriR,
    states: BTreeMap<String, CompiledState>,
}

impl SiteFixture {
    /// Checks prefix closure, event declarations, duplicate events, URIs and
    /// sizes.
    pub fn validate(&self, patterns: &SessionPatterns) -> Result<(), FixtureError> {
        self.compile(patterns).map(|_| ())
    }

    pub fn seed_uri(&self, patterns: &SessionPatterns) -> Result<UriR, FixtureError> {
        UriR::parse(&self.seed, patterns).map_err(FixtureError::BadSeed)
    }

    fn compile(&self, patterns: &SessionPatterns) -> Result<CompiledFixture, FixtureError> {
        let seed = self.seed_uri(patterns)?;
        if !self.states.contains_key("") {
            return Err(FixtureError::MissingRoot);
        }
        let mut states = BTreeMap::new();
        for (key, state) in &self.states {
            let script = InteractionScript::from_key(key).map_err(|error| FixtureError::BadKey {
                key: key.clone(),
                error,
            })?;
            if let Some(parent) = script.parent() {
                let parent_key = parent.key();
                let parent_state =
                    self.states
                        .get(&parent_key)
                        .ok_or_else(|| FixtureError::MissingParent {
                            key: key.clone(),
                            parent: parent_key.clone(),
                        })?;
                let last = script.last().expect("non-root script has a last event");
                if !parent_state.events.iter().any(|e| &e.to_event() == last) {
                    return Err(FixtureError::UndeclaredTransition { key: key.clone() });
                }
            }

            let mut seen = BTreeSet::new();
            let mut events = Vec::with_capacity(state.events.len());
            for raw in &state.events {
                let event = raw.to_event();
                event.validate().map_err(|error| FixtureError::BadEvent {
                    key: key.clone(),
                    error,
                })?;
                if !seen.insert(event.token()) {
                    return Err(FixtureError::DuplicateEvent {
                        key: key.clone(),
                        token: event.token(),
                    });
                }
                events.push(event);
            }

            let mut requests = Vec::with_capacity(state.resources.len());
            for resource in &state.resources {
                if resource.size < 0 {
                    return Err(FixtureError::NegativeSize {
                        key: key.clone(),
                        uri: resource.uri.clone(),
                        size: resource.size,
                    });
                }
                let uri = UriR::parse(&resource.uri, patterns).map_err(|error| {
                    FixtureError::BadResource {
                        key: key.clone(),
                        error,
                    }
                })?;
                requests.push(ResourceRef::new(uri, resource.mime.clone(), resource.size as u64));
            }
            states.insert(key.clone(), CompiledState { requests, events });
        }
        Ok(CompiledFixture { seed, states })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DriverError {
    UnknownSeed(String),
    Fixture { seed: String, error: FixtureError },
    /// The first prefix of the script that cannot be reached.
    Unreachable { prefix: String },
    /// Failure reported by a live backend.
    Backend(String),
}

impl fmt::Display for DriverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverError::UnknownSeed(seed) => write!(f, "no page for seed {seed}"),
            DriverError::Fixture { seed, error } => write!(f, "fixture for {seed}: {error}"),
            DriverError::Unreachable { prefix } => {
                write!(f, "unreachable state: script prefix {prefix:?} does not exist")
            }
            DriverError::Backend(msg) => write!(f, "driver backend: {msg}"),
        }
    }
}

impl core::error::Error for DriverError {}

/// A page positioned at some state.
#[derive(Debug, Clone, PartialEq)]
pub struct PageHandle {
    pub seed: UriR,
    pub current_script: InteractionScript,
    /// Every request since load, cumulatively.
    pub observed_requests: ResourceSet,
    pub available_events: Vec<InteractionEvent>,
    pub markup: String,
}

pub trait PageDriver {
    /// Dereferences `seed` and stops at `s0`.
    fn load(&mut self, seed: &UriR) -> Result<PageHandle, DriverError>;

    /// Reloads the page behind `handle` and replays `script` from `s0`.
    /// Returns the reached state and the cumulative requests since load.
    fn execute(
        &mut self,
        handle: &PageHandle,
        script: &InteractionScript,
    ) -> Result<(PageHandle, ResourceSet), DriverError>;

    /// Elements with listeners in the handle's current state, in a stable
    /// order.
    fn enumerate_events(&self, handle: &PageHandle) -> Vec<InteractionEvent> {
        handle.available_events.clone()
    }
}

impl<D: PageDriver + ?Sized> PageDriver for &mut D {
    fn load(&mut self, seed: &UriR) -> Result<PageHandle, DriverError> {
        (**self).load(seed)
    }

    fn execute(
        &mut self,
        handle: &PageHandle,
        script: &InteractionScript,
    ) -> Result<(PageHandle, ResourceSet), DriverError> {
        (**self).execute(handle, script)
    }

    fn enumerate_events(&self, handle: &PageHandle) -> Vec<InteractionEvent> {
        (**self).enumerate_events(handle)
    }
}

/// Deterministic driver over in-memory fixtures.
#[derive(Debug, Clone)]
pub struct SimulatedDriver {
    patterns: SessionPatterns,
    markup_bytes: usize,
    fixtures: BTreeMap<String, Result<CompiledFixture, FixtureError>>,
}

impl Default for SimulatedDriver {
    fn default() -> Self {
        Self::new(SessionPatterns::default())
    }
}

impl SimulatedDriver {
    pub fn new(patterns: SessionPatterns) -> Self {
        Self {
            patterns,
            markup_bytes: 0,
            fixtures: BTreeMap::new(),
        }
    }

    /// Pads synthetic markup to at least `bytes`.
    pub fn with_markup_bytes(mut self, bytes: usize) -> Self {
        self.markup_bytes = bytes;
        self
    }

    pub fn patterns(&self) -> &SessionPatterns {
        &self.patterns
    }

    /// Registers a fixture under its canonical seed. A fixture that fails
    /// validation is kept and reported when its seed is loaded; only an
    /// unparseable seed is rejected here.
    pub fn insert(&mut self, fixture: &SiteFixture) -> Result<UriR, FixtureError> {
        let seed = fixture.seed_uri(&self.patterns)?;
        let compiled = fixture.compile(&self.patterns);
        self.fixtures
            .insert(String::from(seed.canonical()), compiled);
        Ok(seed)
    }

    pub fn with_fixture(mut self, fixture: &SiteFixture) -> Result<Self, FixtureError> {
        self.insert(fixture)?;
        Ok(self)
    }

    fn fixture(&self, seed: &UriR) -> Result<&CompiledFixture, DriverError> {
        match self.fixtures.get(seed.canonical()) {
            None => Err(DriverError::UnknownSeed(seed.canonical().to_string())),
            Some(Err(error)) => Err(DriverError::Fixture {
                seed: seed.canonical().to_string(),
                error: error.clone(),
            }),
            Some(Ok(fixture)) => Ok(fixture),
        }
    }

    fn render(&self, fixture: &CompiledFixture, script: &InteractionScript, events: &[InteractionEvent]) -> String {
        let mut markup = String::new();
        let _ = write!(
            markup,
            "<html><head><base href=\"{}\"></head><body data-state=\"{}\">",
            fixture.seed.canonical(),
            script.key()
        );
        for event in events {
            let _ = write!(markup, "<div id=\"{}\" on{}=\"h()\"></div>", event.target, event.kind);
        }
        // "<!--" + pad + "-->" + "</body></html>" lands exactly on markup_bytes.
        if markup.len() + 21 < self.markup_bytes {
            let pad = self.markup_bytes - markup.len() - 21;
            markup.push_str("<!--");
            markup.push_str(&".".repeat(pad));
            markup.push_str("-->");
        }
        markup.push_str("</body></html>");
        markup
    }
}

impl PageDriver for SimulatedDriver {
    fn load(&mut self, seed: &UriR) -> Result<PageHandle, DriverError> {
        let fixture = self.fixture(seed)?;
        let root = &fixture.states[""];
        let observed: ResourceSet = root.requests.iter().cloned().collect();
        Ok(PageHandle {
            seed: fixture.seed.clone(),
            current_script: InteractionScript::empty(),
            markup: self.render(fixture, &InteractionScript::empty(), &root.events),
            observed_requests: observed,
            available_events: root.events.clone(),
        })
    }

    fn execute(
        &mut self,
        handle: &PageHandle,
        script: &InteractionScript,
    ) -> Result<(PageHandle, ResourceSet), DriverError> {
        let fixture = self.fixture(&handle.seed)?;
        let root = &fixture.states[""];
        let mut observed: ResourceSet = root.requests.iter().cloned().collect();
        let mut events: &[InteractionEvent] = &root.events;
        let mut reached = InteractionScript::empty();
        for event in &script.events {
            reached = reached.extended(event.clone());
            if !events.contains(event) {
                return Err(DriverError::Unreachable {
                    prefix: reached.key(),
                });
            }
            // A declared event with no state of its own is inert.
            match fixture.states.get(&reached.key()) {
                Some(state) => {
                    observed.extend(state.requests.iter().cloned());
                    events = &state.events;
                }
                None => events = &[],
            }
        }
        let handle = PageHandle {
            seed: fixture.seed.clone(),
            markup: self.render(fixture, &reached, events),
            current_script: reached,
            observed_requests: observed.clone(),
            available_events: events.to_vec(),
        };
        Ok((handle, observed))
    }
}

/// Wraps a driver and logs every load and script execution.
#[derive(Debug, Clone, Default)]
pub struct RecordingDriver<D> {
    pub inner: D,
    pub loads: Vec<UriR>,
    pub executions: Vec<InteractionScript>,
}

impl<D> RecordingDriver<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            loads: Vec::new(),
            executions: Vec::new(),
        }
    }

    /// Execution count per script key.
    pub fn execution_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for script in &self.executions {
            *counts.entry(script.key()).or_insert(0) += 1;
        }
        counts
    }
}

impl<D: PageDriver> PageDriver for RecordingDriver<D> {
    fn load(&mut self, seed: &UriR) -> Result<PageHandle, DriverError> {
        self.loads.push(seed.clone());
        self.inner.load(seed)
    }

    fn execute(
        &mut self,
        handle: &PageHandle,
        script: &InteractionScript,
    ) -> Result<(PageHandle, ResourceSet), DriverError> {
        self.executions.push(script.clone());
        self.inner.execute(handle, script)
    }

    fn enumerate_events(&self, handle: &PageHandle) -> Vec<InteractionEvent> {
        self.inner.enumerate_events(handle)
    }
}

/// Builds a fixture state from `(uri, mime, size)` triples and
/// `(target, kind)` pairs. Handy for tests and generators.
pub fn fixture_state(resources: &[(&str, &str, i64)], events: &[(&str, &str)]) -> FixtureState {
    FixtureState {
        resources: resources
            .iter()
            .map(|(uri, mime, size)| FixtureResource {
                uri: uri.to_string(),
                mime: mime.to_string(),
                size: *size,
            })
            .collect(),
        events: events
            .iter()
            .map(|(target, kind)| FixtureEvent {
                target: target.to_string(),
                kind: kind.to_string(),
            })
            .collect(),
    }
}

/// Debug label for a script used in error messages and logs.
pub fn describe(script: &InteractionScript) -> String {
    if script.is_empty() {
        String::from("s0")
    } else {
        format!("[{}]", script.to_csv())
    }
}
