use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text artifact (ARPA model, phrase table, sidecar, ...) failed to parse.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    /// A caller violated an operation precondition (bad argument, OOV word,
    /// too few seed pairs, ...).
    #[error("{0}")]
    Contract(String),

    /// A pipeline stage was asked to run before its inputs exist.
    #[error("missing artifact {path} (produced by stage `{producer}`)")]
    MissingArtifact { path: PathBuf, producer: String },

    /// Config validation reports every problem at once, not fail-fast.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
