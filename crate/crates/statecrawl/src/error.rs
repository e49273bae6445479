use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors from a pipeline stage. Each maps to a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing upstream artifact {path}; run `statecrawl {stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("{path}:{line}: {message}")]
    Holdings {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Stage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
