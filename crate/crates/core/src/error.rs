use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("canonical pattern violated: residual {residual:e} exceeds {tolerance:e}")]
    PatternViolation { residual: f64, tolerance: f64 },

    #[error("generation failure: {0}")]
    GenerationFailure(String),
}

impl Error {
    /// Prefixes the message with additional context, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
            Error::InvalidParameter(m) => Error::InvalidParameter(format!("{ctx}: {m}")),
            Error::PreconditionViolation(m) => Error::PreconditionViolation(format!("{ctx}: {m}")),
            Error::HypothesisViolation(m) => Error::HypothesisViolation(format!("{ctx}: {m}")),
            Error::NumericalFailure(m) => Error::NumericalFailure(format!("{ctx}: {m}")),
            Error::NotSupported(m) => Error::NotSupported(format!("{ctx}: {m}")),
            Error::GenerationFailure(m) => Error::GenerationFailure(format!("{ctx}: {m}")),
            e @ Error::PatternViolation { .. } => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
