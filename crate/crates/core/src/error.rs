use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (leading minor {minor} failed after ridge {ridge:e})")]
    NotPositiveDefinite { minor: usize, ridge: f64 },

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("covariance is singular and the ridge policy could not restore positive definiteness")]
    SingularCovariance,

    #[error("minibatch size {n} does not exceed parameter dimension {p}; full-covariance LSNR undefined")]
    InsufficientBatch { n: usize, p: usize },

    #[error("batch of size {n} is too small (need at least {min})")]
    BatchTooSmall { n: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("requested minibatch size {n} exceeds dataset size {len}")]
    SizeExceedsDataset { n: usize, len: usize },

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("column {0} missing from input")]
    MissingColumn(usize),

    #[error("gradient is not finite at the current parameter value")]
    NonFiniteGradient,

    #[error("synthetic-likelihood covariance degenerate after ridge")]
    DegenerateCovariance,

    #[error("GP kernel matrix ill-conditioned; jitter escalation exhausted")]
    IllConditionedKernel,

    #[error("worker {0} owns an empty data shard")]
    EmptyShard(usize),

    #[error("worker shards do not partition the dataset")]
    BadPartition,

    #[error("chain trace is empty")]
    EmptyTrace,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulator failed: {0}")]
    SimulatorFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
