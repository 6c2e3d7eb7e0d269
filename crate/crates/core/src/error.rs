use thiserror::Error;

/// Errors raised by the linear algebra, manifold and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsafError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not traceless (trace {trace:e})")]
    NotTraceless { trace: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("trace {trace} does not match the required trace {expected}")]
    TraceMismatch { trace: f64, expected: f64 },

    #[error("eigen-solver failed to converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("non-finite value encountered{}", match .iteration { Some(i) => format!(" at iteration {i}"), None => String::new() })]
    NonFinite { iteration: Option<usize> },

    #[error("flow step {iteration} failed: {source}")]
    StepFailed {
        iteration: usize,
        source: Box<QsafError>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QsafError>;
