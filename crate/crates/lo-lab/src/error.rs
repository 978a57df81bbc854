//! Error taxonomy shared by all modules.
//!
//! The CLI maps these onto exit codes: validation errors exit 1,
//! capacity refusals exit 2, detected invariant violations exit 3.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on the inputs does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The instance is beyond a complexity guardrail (support width,
    /// prime size, enumeration count). Not a bug: the request is refused.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The operation is vacuous for these inputs (e.g. the dual bound
    /// below n = 100).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A mathematical invariant the construction guarantees failed to
    /// hold. Seeing this is a discovery (or a bug), never a normal state.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable one-word kind tag used in machine-parsable CLI messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "validation",
            Error::Capacity(_) => "capacity",
            Error::NotApplicable(_) => "not-applicable",
            Error::InvariantViolation(_) => "violation",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
            Error::Csv(_) => "serde",
        }
    }
}
