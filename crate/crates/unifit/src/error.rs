//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building tensors, solving, or doing I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("empty input in {context}")]
    EmptyInput { context: String },

    #[error("observation weight must be positive: record {index} has weight {value}")]
    InvalidWeight { index: usize, value: f64 },

    /// The metric matrix of a generalized eigenproblem is not positive definite.
    #[error(
        "degenerate metric: eigenvalue {eigenvalue:.6e} at rank {index} \
         (largest {max_eigenvalue:.6e}) is not positive definite"
    )]
    DegenerateMetric {
        index: usize,
        eigenvalue: f64,
        max_eigenvalue: f64,
    },

    /// A Gram matrix has (numerically) null directions; the data does not
    /// determine the operator in those directions.
    #[error("degenerate Gram matrix: near-null directions (rank, eigenvalue) {near_null:?}")]
    DegenerateGram { near_null: Vec<(usize, f64)> },

    /// The row Gram of a candidate solution collapsed; the state cannot be
    /// adjusted to an isometry.
    #[error("rank collapse while adjusting to an isometry (iteration {iteration:?})")]
    RankCollapse { iteration: Option<usize> },

    #[error("eigenstate rank {rank} requested but only {available} states exist")]
    RankUnavailable { rank: usize, available: usize },

    #[error("{got} probe states given, at least {required} required")]
    InsufficientProbes { got: usize, required: usize },

    #[error("normal equations for the multipliers are degenerate")]
    SingularNormalEquations,

    #[error("quadratic form is not positive: {value:.6e}")]
    NonPositiveQuadraticForm { value: f64 },

    #[error("zero-norm vector in {context}")]
    ZeroNorm { context: String },

    #[error("need at least 2 states in a time series, got {got}")]
    TooFewStates { got: usize },

    #[error("initial vector must have unit norm, got {norm}")]
    NotUnitNorm { norm: f64 },

    #[error("no solver run completed: {detail}")]
    NoRunCompleted { detail: String },

    #[error("malformed file {path}: {detail}")]
    Malformed { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }
}
