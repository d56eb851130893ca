//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("contrast not centered: {0}")]
    NotCentered(String),

    #[error("intercept weights must sum to 1 (got {0})")]
    InterceptWeights(f64),

    #[error("zero contrast: {0}")]
    ZeroContrast(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("too few observations: n = {n}, need at least {required}")]
    TooFewObservations { n: usize, required: usize },

    #[error("missing value in column '{column}' at row {row}")]
    MissingValue { column: String, row: usize },

    #[error("unknown variable '{0}'")]
    UnknownVariable(String),

    #[error("no contrast assigned to factor '{0}'")]
    MissingContrast(String),

    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate random draw persisted after {0} attempts")]
    DegenerateDraw(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
