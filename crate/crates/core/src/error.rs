use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the quantizer range.
    #[error("value {value} exceeds the quantizer range {range}")]
    Saturation { value: f64, range: f64 },
    /// A dimension argument is invalid (e.g. k > n).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    /// Two objects that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The problem is too large for exhaustive enumeration.
    #[error("n = {n} exceeds the enumeration limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },
    /// Pivots fell below tolerance or an iteration cap was hit.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// A least-squares system has linearly dependent columns.
    #[error("rank-deficient system")]
    RankDeficient,
    /// A configuration value is out of its admissible range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// JSON (de)serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
