use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain input to an operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// Invalid configuration value; `path` names the offending config section or key.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A learner was driven out of order (e.g. missing feedback after round one).
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Parse failure in an input file, with a 1-based line number.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Runtime failure during an experiment, stamped with the repeat and round.
    #[error("repeat {repeat}, round {round}: {source}")]
    Round {
        repeat: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
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
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
