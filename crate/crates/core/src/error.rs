use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside the domain of the map: {0}")]
    Domain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no valid samples in region ({0})")]
    EmptyRegion(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    #[error("insufficient data: {usable} usable entries, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("subsolver stalled after {0} iterations")]
    SubsolverStall(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
