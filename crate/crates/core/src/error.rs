use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `field` is the dotted
    /// path into the JSON document (e.g. `flux.q`).
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("numerical failure: {message}")]
    Numerical { message: String },

    /// A single ensemble member failed; carries the derived seed so the run
    /// can be reproduced in isolation.
    #[error("ensemble member {index} (seed {seed}) failed: {source}")]
    Member {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for configuration errors, including those wrapped in a failed
    /// ensemble member.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } => true,
            Error::Member { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } => true,
            Error::Member { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
