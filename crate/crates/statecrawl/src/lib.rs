//! File formats, corpus generators, the HTTP TimeMap backend and the
//! pipeline stages behind the `statecrawl` command.

pub mod config;
pub mod error;
pub mod fixture_io;
pub mod generate;
pub mod holdings;
pub mod live;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use error::{Error, Result};
