use thiserror::Error;

/// Errors produced by the numerical routines and the job runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters are valid but the requested regime has no finite answer
    /// (e.g. infinite-horizon ruin with non-negative net drift).
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: value {value:e}, error estimate {err_est:e}")]
    NonConvergence { value: f64, err_est: f64 },

    /// The inner level of a nested integral failed at outer abscissa `z`.
    #[error("inner integral failed at z = {z}: {source}")]
    InnerQuadrature { z: f64, source: Box<Error> },

    /// A semi-infinite range could not be truncated within the doubling budget.
    #[error("tail truncation failed: bound {bound:e} at {point} still above cutoff")]
    Truncation { point: f64, bound: f64 },

    /// The Laplace exponent did not reach the requested level.
    #[error("laplace exponent inversion failed for lambda = {lambda}")]
    Inversion { lambda: f64 },

    /// Monte Carlo work budget exceeded; the estimate covers `achieved` paths only.
    #[error("monte carlo budget exceeded: {achieved} of {requested} paths simulated")]
    McBudget {
        achieved: u64,
        requested: u64,
        partial: Option<(f64, f64)>,
    },

    /// Malformed job specification or configuration.
    #[error("invalid job: {0}")]
    Job(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::InnerQuadrature { .. }
                | Error::Truncation { .. }
                | Error::Inversion { .. }
                | Error::McBudget { .. }
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_convergence_failure() {
            3
        } else {
            2
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}
