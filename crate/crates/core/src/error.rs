use thiserror::Error;

use crate::vi_solver::Residuals;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain: the predicate selected no interior node")]
    EmptyDomain,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("masks are not nested: {0}")]
    NotNested(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fractional order {0} outside the admissible range")]
    InvalidOrder(f64),

    #[error("eigensolver did not converge (residual {residual:e})")]
    EigenNoConvergence { residual: f64 },

    #[error("domain too large for dense methods: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("big-box backend requires an enclosing mask strictly larger than the domain")]
    SameDomainBackend,

    #[error("operator order mismatch: {0} vs {1}")]
    OrderMismatch(f64, f64),

    #[error("{method} reached the iteration cap ({iterations}) with residuals {residuals:?}")]
    IterationCap {
        method: &'static str,
        iterations: usize,
        residuals: Residuals,
    },

    #[error("penalty sandwich violated by {violation:e}")]
    SandwichViolation { violation: f64 },

    #[error("no KKT point found among enumerated active sets (best violation {best_violation:e})")]
    NoKktPoint { best_violation: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("c_s calibration mismatch: calibrated {calibrated}, closed form {closed_form}")]
    Calibration { calibrated: f64, closed_form: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
