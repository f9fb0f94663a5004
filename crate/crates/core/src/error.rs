use thiserror::Error;

/// Errors raised by the library. Physics outcomes such as a blowup are
/// reported through [`crate::integrator::StepError`] and are carried as data
/// by the experiment layer rather than surfacing here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid groove specification: {0}")]
    InvalidSpec(String),

    #[error("inadmissible groove: {0}")]
    InadmissibleDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("empty series")]
    EmptySeries,

    #[error("decay fit: {0}")]
    FitDomain(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("unknown verification tier {0:?} (expected quick or full)")]
    UnknownTier(String),

    #[error("twin-run configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
