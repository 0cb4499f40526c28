use thiserror::Error;

use crate::events::ReplayError;
use crate::llm::GatewayError;
use crate::spans::RangeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure of an engine command. Every variant maps to a stable wire code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("illegal in current stage: {0}")]
    Stage(String),

    #[error("session {0} has a request in flight")]
    Busy(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("provenance check failed: {0}")]
    Provenance(String),

    #[error("duplicate submission: {0}")]
    Duplicate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Range(#[from] RangeError),

    #[error(transparent)]
    Gateway(#[from] GatewayError),

    #[error(transparent)]
    Replay(#[from] ReplayError),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "not_found",
            Error::InvalidArgument(_) | Error::Range(_) => "invalid_argument",
            Error::Stage(_) => "stage",
            Error::Busy(_) => "busy",
            Error::Conflict(_) => "conflict",
            Error::Provenance(_) => "provenance",
            Error::Duplicate(_) => "duplicate",
            Error::Precondition(_) => "precondition",
            Error::Gateway(g) => g.code(),
            Error::Replay(_) => "corrupt_log",
            Error::Corpus(_) => "corpus",
            Error::Io(_) => "internal",
        }
    }
}
