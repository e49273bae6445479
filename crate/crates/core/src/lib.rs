//! Client-side descendant crawling model.
//!
//! A seed URI-R is loaded into an initial client state `s0`; client-side
//! events (clicks, mouseovers, ...) move the page into descendant states that
//! may request additional embedded resources. This crate holds the pure parts
//! of that pipeline:
//!
//! - [`uri`], [`event`], [`resource`], [`state`]: the finite-state model, the
//!   resource-set algebra and the two equivalence relations (resource-set and
//!   interaction-script).
//! - [`driver`]: the page-driver interface and a deterministic simulated
//!   driver over declarative site fixtures.
//! - [`crawler`]: depth-first construction of the descendant tree with script
//!   deduplication and frontier-explosion guards.
//! - [`analysis`]: contributing paths, per-level new resources, corpus
//!   statistics and occurrence rankings.
//! - [`policy`]: crawl-time model, Max Coverage / Max ROI selection and the
//!   storage model.
//! - [`memento`]: TimeMap link-format parsing and archival coverage.
//! - [`metadata`]: per-descendant WARC metadata records.
//!
//! Everything here is `no_std` + `alloc`; file formats, generators, network
//! lookups and the CLI live in the `statecrawl` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod crawler;
pub mod datetime;
pub mod driver;
pub mod event;
pub mod memento;
pub mod metadata;
pub mod policy;
pub mod resource;
pub mod state;
pub mod stats;
pub mod uri;

pub use analysis::{
    aggregate, analyze_tree, corpus_frontier, level_contributions, occurrence_ranking,
    CorpusStats, OccurrenceRanking, PathAnalysis, SeedAnalysis,
};
pub use crawler::{
    build_tree, classify, classify_tree, interaction_frontier_size, CrawlLimits,
    SeedClassification,
};
pub use datetime::DateTime;
pub use driver::{
    DriverError, FixtureError, FixtureEvent, FixtureResource, FixtureState, PageDriver,
    PageHandle, RecordingDriver, SimulatedDriver, SiteFixture,
};
pub use event::{EventKind, InteractionEvent, InteractionScript, TokenError};
pub use memento::{
    coverage, parse_timemap, ArchivalStatus, ArchiveBackend, CoverageReport, LookupError,
    MockArchive, TimeMap, TimeMapError,
};
pub use metadata::{emit_record, DescendantMetadataRecord, MetadataError};
pub use policy::{
    estimate_crawl, estimate_storage, extrapolate, select_policy, CrawlEstimate, CrawlPolicy,
    CrawlRates, PolicyKind, StorageEstimate,
};
pub use resource::{ResourceRef, ResourceSet};
pub use state::{
    new_resources, path_resources, scripts_equivalent, states_equivalent, ClientState, StateId,
    StatePath, StateTree,
};
pub use uri::{canonicalize, SessionPatterns, UriError, UriR};
