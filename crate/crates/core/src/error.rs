use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A material or solver parameter lies outside its admissible range.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// An argument violates the documented precondition of an operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed or inconsistent user input (load histories, field files, options).
    #[error("invalid input: {0}")]
    Input(String),

    /// The record does not carry the data an operation needs.
    #[error("missing capability: {0}")]
    Capability(String),

    /// The local plastic solve failed at a time sample.
    #[error("no converged plastic increment at time index {time_index}: {reason}")]
    Convergence { time_index: usize, reason: String },

    #[error("surrogate training failed: {0}")]
    Training(String),

    #[error("{path}: {source}")]
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
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the local integration (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }
}
