use thiserror::Error;

use crate::cmc::ValidationReport;

pub type Result<T, E = CsdpError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum CsdpError {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("product space {num_states}^{num_sequences} = {size} exceeds the enumeration cap {cap}; use the sampling path instead")]
    CapExceeded {
        num_states: usize,
        num_sequences: usize,
        size: String,
        cap: usize,
    },

    #[error("a dense table over {states} joint states needs {entries} entries, above the limit of {limit}; use the sampling path")]
    TableTooLarge {
        states: usize,
        entries: u128,
        limit: u128,
    },

    #[error("{matrix} is reducible; a unique stationary distribution is not guaranteed")]
    Reducible { matrix: String },

    #[error("power iteration oscillates with period {period}; the chain is periodic")]
    Periodic { period: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("power iteration converged to different limits from different starts (gap {gap:e}); the stationary distribution is not unique")]
    NonUniqueStationary { gap: f64 },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("conditioning state {state:?} has zero probability under the stationary law")]
    ZeroProbabilityState { state: Vec<usize> },

    #[error("every conditioning event in the bounded aged correlation is degenerate")]
    AllEventsDegenerate,

    #[error("age {age} for sequence {sequence} exceeds the history available at time {t}")]
    AgeExceedsHistory {
        sequence: usize,
        age: usize,
        t: usize,
    },

    #[error("state {value} at time {t}, sequence {sequence} is outside 0..{num_states}")]
    StateOutOfRange {
        t: usize,
        sequence: usize,
        value: usize,
        num_states: usize,
    },

    #[error("query `{query}` is degenerate: one-record sensitivity is zero")]
    DegenerateQuery { query: String },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CsdpError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        CsdpError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for CsdpError {
    fn from(e: std::io::Error) -> Self {
        CsdpError::Io(e.to_string())
    }
}
