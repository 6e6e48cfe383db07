use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps [`Error::Accuracy`] to exit code 3 and everything else to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ratio at index {index} is {value}, expected a value in (0, 1)")]
    RatioOutOfRange { index: usize, value: f64 },

    #[error("infeasible lengths: level {level} would need ratio >= 1 (2^(n-1) l_n = {mass}, remaining = {remaining})")]
    InfeasibleLengths { level: usize, mass: f64, remaining: f64 },

    #[error("quadrature rule error: {0}")]
    Rule(String),

    #[error("accuracy not reached: estimate {estimate} with error {error} > tolerance {tolerance}")]
    Accuracy {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
