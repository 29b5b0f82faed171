use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent} already has an element in the assignment")]
    DuplicateAgent { agent: usize },

    #[error("assignment has no element for agent {agent}")]
    MissingAgent { agent: usize },

    #[error("agent {agent} action {action} is out of range")]
    OutOfRange { agent: usize, action: usize },

    #[error("exhaustive check refused: {size} exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("set function has no value for subset {0}")]
    MissingSubset(String),

    #[error("set function is not normalized: f(empty) = {0}")]
    NotNormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("round {0} is not pending")]
    UnknownRound(u64),

    #[error("neighbor {neighbor} already delivered its action for round {round}")]
    AlreadyReceived { neighbor: usize, round: u64 },

    #[error("agent {neighbor} is not an in-neighbor for round {round}")]
    NotANeighbor { neighbor: usize, round: u64 },

    #[error("no delay trace entry for link {sender}->{recipient} at round {round}")]
    TraceMiss {
        sender: usize,
        recipient: usize,
        round: u64,
    },

    #[error("delay {delay} on link {sender}->{recipient} exceeds bound {bound}")]
    DelayBound {
        sender: usize,
        recipient: usize,
        delay: u64,
        bound: u64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
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

pub type Result<T, E = Error> = std::result::Result<T, E>;
