use thiserror::Error;

/// Errors raised by the model, factorization, profit and solver modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain where the quantity is finite or defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation has no implementation for this model family.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// Parameters violate the constraints of the type being built.
    #[error("construction error: {0}")]
    Construction(String),

    /// Geometric bracket expansion never produced a sign change.
    #[error("bracket failure after {expansions} expansions at u = {u}: {reason}")]
    BracketFailure { u: f64, expansions: usize, reason: String },

    /// A solved boundary decreased between two adjacent grid points.
    #[error("monotonicity violation between grid points {index} and {}: b = {left} > {right}", index + 1)]
    MonotonicityViolation { index: usize, left: f64, right: f64 },

    /// A sufficient condition (moment or discount condition) does not hold.
    #[error("condition violation: {0}")]
    ConditionViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
