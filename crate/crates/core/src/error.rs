use thiserror::Error;

/// Library-level failure classification.
///
/// `InvalidInput` covers malformed arguments (shape mismatches, out-of-range
/// parameters). `Domain` covers well-formed inputs on which a formula is not
/// defined (e.g. an energy level outside the potential well). `Infeasible`
/// covers constant selections whose admissible interval is empty; the binding
/// constraint is named so reports can surface it. `Numeric` covers solver
/// breakdowns (non-convergence, overflow in a context that cannot absorb it).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {constraint}")]
    Infeasible { constraint: String },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn infeasible(constraint: impl Into<String>) -> Self {
        Error::Infeasible { constraint: constraint.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
