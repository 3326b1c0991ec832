use thiserror::Error;

/// Errors raised by the estimation algebra and the model backends.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inconsistent observables: population {name} = {value:e} is negative")]
    InconsistentObservables { name: &'static str, value: f64 },

    #[error("chi ansatz undefined: radicand {radicand:e} is negative")]
    AnsatzDomain { radicand: f64 },

    #[error("special function domain error: argument {0} must be positive")]
    Domain(f64),

    #[error("correlator {correlator} outside the physical range (-3/4, 1/4); point lies outside the universal regime")]
    OutsideCriticalRegime { correlator: f64 },

    #[error("probe reduced density matrix has off-diagonal element {magnitude:e} in the singlet/triplet basis")]
    SymmetryViolation { magnitude: f64 },

    #[error("finite-difference step underflow for parameter {param} = {value:e}")]
    DerivativeFailure { param: String, value: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
