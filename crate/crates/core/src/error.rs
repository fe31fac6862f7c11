use thiserror::Error;

/// Errors produced by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries no information (e.g. every coefficient is zero).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The truncation horizon search hit its cap before the tail became small.
    #[error("truncation failure: no small tail found before horizon {horizon}")]
    TruncationFailure { horizon: u64 },

    /// Invalid parameters, malformed text or an inconsistent configuration.
    #[error("validation error: {0}")]
    Validation(String),

    /// Input is well formed but outside what the algorithm supports.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// A required input was absent.
    #[error("contract error: {0}")]
    Contract(String),

    /// An improper integral did not settle.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// The data on the grid does not satisfy the hypotheses of a construction.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// A guaranteed inequality failed numerically.
    #[error("assertion failed: {0}")]
    Assertion(String),

    /// The coefficient distribution has zero variance (monomial).
    #[error("zero variance: the series is a monomial")]
    ZeroVariance,

    /// A non-finite value showed up where a number was expected.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by malformed or out-of-contract user input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Contract(_) | Error::Unsupported(_) | Error::HypothesisViolation(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
