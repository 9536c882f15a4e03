use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("Fock truncation insufficient: leakage {leakage:.3e} exceeds bound {bound:.3e}")]
    TruncationInsufficient { leakage: f64, bound: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("empty Kraus operator list")]
    EmptyKraus,

    #[error("channel is not trace preserving: max |sum K^dag K - I| = {deviation:.3e}")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("states are linearly dependent (smallest Gram eigenvalue {min_eigenvalue:.3e})")]
    LinearlyDependent { min_eigenvalue: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("Kraus rank {rank} is not supported (maximum {max})")]
    UnsupportedRank { rank: usize, max: usize },

    #[error("Kraus operator acts outside the support of its layer operator (residual {residual:.3e})")]
    SupportViolation { residual: f64 },

    #[error("block column is not an isometry: max |V^dag V - I| = {deviation:.3e}")]
    NotIsometry { deviation: f64 },

    #[error("reference state is not pure (purity {purity:.12})")]
    NotPure { purity: f64 },

    #[error("chi matrices use different bases: {0} vs {1}")]
    BasisMismatch(String, String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
