use thiserror::Error;

/// Errors raised by the propagators and their supporting linear algebra.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {coeffs} coefficients for {states} states")]
    LengthMismatch { coeffs: usize, states: usize },

    #[error("operation needs at least one state")]
    Empty,

    #[error("state has zero norm")]
    ZeroState,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive semidefinite: pivot {pivot:e} at column {index}")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error("overlap matrix is singular at column {index} (pivot {pivot:e})")]
    SingularOverlap { index: usize, pivot: f64 },

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps")]
    EigenConvergence { sweeps: usize },

    #[error("Chebyshev bounds violated: norm drift {drift:e}")]
    BoundsViolated { drift: f64 },

    #[error(
        "{remaining} dependent basis states remain after reaching power cap {cap}; \
         increase m or decrease n"
    )]
    DependencyUnresolved { remaining: usize, cap: usize },

    #[error("invalid basis window: {0}")]
    WindowConfig(String),

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
