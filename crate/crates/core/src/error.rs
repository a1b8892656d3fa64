use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a line-oriented input could not be decoded.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("transport error: {0}")]
    Transport(String),

    /// Replay mode was asked for a request that was never recorded.
    #[error("replay miss: cassette has no entry for key {key}")]
    ReplayMiss { key: String },

    #[error("provider error: {0}")]
    Provider(String),

    #[error("execution failed for pair {pair}: {source}")]
    Execution {
        pair: String,
        #[source]
        source: Box<Error>,
    },

    /// More pairs failed than the configured error budget allows.
    #[error("{errored} of {total} pairs failed to execute ({} replay misses)", replay_misses.len())]
    TooManyErrors {
        errored: usize,
        total: usize,
        replay_misses: Vec<String>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True when this error (or the error it wraps) is a cassette replay miss.
    pub fn is_replay_miss(&self) -> bool {
        match self {
            Error::ReplayMiss { .. } => true,
            Error::Execution { source, .. } => source.is_replay_miss(),
            Error::TooManyErrors { replay_misses, .. } => !replay_misses.is_empty(),
            _ => false,
        }
    }

    /// The missing cassette key, if this is (or wraps) a replay miss.
    pub fn replay_key(&self) -> Option<&str> {
        match self {
            Error::ReplayMiss { key } => Some(key),
            Error::Execution { source, .. } => source.replay_key(),
            _ => None,
        }
    }
}
