use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate crosstalk device: alpha + beta = {sum} must exceed 1")]
    DegenerateDevice { sum: f64 },

    #[error("estimate undefined: {0}")]
    UndefinedEstimate(&'static str),

    #[error(
        "quadrature over [{lower}, {upper}] did not converge: {unconverged} panels hit \
         max depth, estimate {estimate:e}, error estimate {error_estimate:e}"
    )]
    QuadratureNotConverged {
        lower: f64,
        upper: f64,
        estimate: f64,
        error_estimate: f64,
        unconverged: usize,
    },

    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: u64, available: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("target energy fraction {fraction:.3e} lies in flagged response bins")]
    UncorrectableBand { fraction: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
