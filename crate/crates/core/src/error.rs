use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("singular matrix in {context} (condition estimate {condition:.3e})")]
    Singular { context: String, condition: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("orbit not admissible: {0}")]
    Admissibility(String),

    #[error("Newton iteration diverged at step {step} (t = {time:.6}), residual {residual:.3e}")]
    NewtonDivergence { step: usize, time: f64, residual: f64 },

    #[error("no admissible observation subset near y = {center:?}")]
    NoAdmissibleSubset { center: Vec<f64> },

    #[error("data mismatch: {0}")]
    DataMismatch(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Singular { .. }
                | Error::NewtonDivergence { .. }
                | Error::NoAdmissibleSubset { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
