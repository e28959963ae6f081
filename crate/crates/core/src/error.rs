use thiserror::Error;

use crate::fractional::Atom;

#[derive(Debug, Error)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// One of the inequalities `alpha <= beta < 1`, `beta > 1/2` failed.
    #[error("parameter chain violated: {0}")]
    ParamChain(String),

    #[error("ellipticity violated: a = {value} at midpoint {index}")]
    Ellipticity { index: usize, value: f64 },

    #[error("operator is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis mu != 0 violated: the temporal factor vanishes identically")]
    DegenerateSource,

    #[error("point kernel vanishes identically")]
    ZeroKernel,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("atom refinement did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<Atom>,
    },

    #[error("transform consistency check failed: relative mismatch {0:e}")]
    TransformMismatch(f64),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl FracError {
    /// Errors caused by bad input rather than by a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            FracError::NotPositiveDefinite { .. }
                | FracError::Singular(_)
                | FracError::NonConvergence { .. }
                | FracError::TransformMismatch(_)
                | FracError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::Domain(msg.into()))
}
