use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state length {got} does not match network size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("change of variables is singular for shortcut strength s = 0")]
    SingularTransform,

    #[error("{op} requires {regime}")]
    OutOfRegime { op: &'static str, regime: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("root finder did not converge; last estimate {estimate} has residual {residual:e}")]
    RootNotConverged { estimate: Complex64, residual: f64 },

    #[error("{lambda} is not an eigenvalue of the coupling matrix (|chi| = {residual:e})")]
    InvalidEigenvalue { lambda: Complex64, residual: f64 },

    #[error("dense eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("branch {k} is not born at alpha = {alpha} (needs alpha > {alpha_crit})")]
    BranchNotBorn { k: usize, alpha: f64, alpha_crit: f64 },

    #[error("Newton Jacobian is singular (bifurcation point?) at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonNotConverged { iterations: usize, residual: f64, last: Vec<f64> },

    #[error("Newton collapsed onto the zero solution")]
    TrivialCollapse,

    #[error("orbit residual {residual:e} exceeds tolerance {tol:e}")]
    StaleOrbit { residual: f64, tol: f64 },

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("phase undefined: every node is near zero on the tail window")]
    PhaseUndefined,

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("continuation could not start: {0}")]
    Seed(Box<Error>),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::LengthMismatch { .. }
                | Error::SingularTransform
                | Error::OutOfRegime { .. }
                | Error::InvalidBracket { .. }
                | Error::BranchNotBorn { .. }
        )
    }
}
