use thiserror::Error;

/// Errors raised by the numerical kernels and model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is numerically singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("rank-one update is not invertible: |1 + v'A^-1 u| = {0:e}")]
    DenominatorZero(f64),

    #[error("eigensolver did not converge within {0} iterations")]
    ConvergenceFailure(usize),

    #[error("pattern is not irreducible (graph is not strongly connected)")]
    NotIrreducible,

    #[error("matrix is not primitive (graph period {0})")]
    NotPrimitive(u64),

    #[error("row {row} has Euclidean norm {norm} exceeding beta = {beta}")]
    RowNormExceeded { row: usize, norm: f64, beta: f64 },

    #[error("degenerate spectrum: non-Perron eigenvalue {0} lies within 1e-10 of 1")]
    DegenerateSpectrum(f64),

    #[error("trajectory does not settle within {0} steps")]
    NotSettled(usize),

    #[error("sigma grid must be strictly decreasing with values in (0, 1)")]
    GridNotDecreasing,

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
