use thiserror::Error;

use crate::qubits::DensityMatrix2;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A state vector with zero norm (or non-finite entries) was supplied.
    #[error("invalid qubit state: {0}")]
    InvalidState(String),

    /// A matrix failed the Hermitian / unit-trace / positivity checks.
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The data carry no information: no counts, or no heralded events.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The likelihood optimizer ran out of iterations. The best iterate is
    /// still a physical state and is attached for callers that can use it.
    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        best: Box<DensityMatrix2>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks `lo <= value <= hi` (and finiteness).
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} is outside [{lo}, {hi}]")))
    }
}
