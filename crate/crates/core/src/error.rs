use thiserror::Error;

/// Errors shared by the sampling structures, solvers and access layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input must contain at least one entry")]
    EmptyInput,
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("empty distribution: total weight is zero")]
    EmptyDistribution,
    #[error("index {index} out of bounds for dimension {dim}")]
    IndexOutOfBounds { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    EntryOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("row {0} has zero norm and defines no projection")]
    DegenerateRow(usize),
    #[error("diagonal entry {0} is not positive")]
    NonPositiveDiagonal(usize),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("rejection sampling gave up after {attempts} attempts")]
    SamplingFailure { attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
