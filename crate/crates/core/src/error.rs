use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bit or symbol count does not fit the frame structure.
    #[error("framing error: {0}")]
    Framing(String),

    /// Invalid configuration. `key` names the offending parameter.
    #[error("configuration error ({key}): {reason}")]
    Config { key: String, reason: String },

    #[error("selection error: start {start}, length {length}, table length {table_len}")]
    Selection {
        start: usize,
        length: usize,
        table_len: usize,
    },

    #[error("channel error: {0}")]
    Channel(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// A trial hit its event budget without reaching a terminal state.
    #[error("trial {trial} did not terminate within {budget} events")]
    Deadlock { trial: u64, budget: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
