use thiserror::Error;

/// Errors raised by the numeric core. Scalar payloads are widened to `f64`
/// so the type does not depend on the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: argument {value} is not finite")]
    Domain { what: &'static str, value: f64 },

    #[error("{what}: argument {value} exceeds the supported limit {limit}")]
    Range {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("non-finite value while evaluating {what} at {location}")]
    NonFinite { what: &'static str, location: f64 },

    #[error("index {index} out of range for size {len}")]
    Index { index: usize, len: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate operator: det(I - K) = {det} is not positive")]
    Degenerate { det: f64 },

    #[error("integration blew up: step size underflow at shift {last_shift}")]
    Singularity { last_shift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
