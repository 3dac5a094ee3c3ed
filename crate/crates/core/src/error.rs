use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Precondition violations. Every fallible operation in the crate reports one
/// of these; none of them indicate an internal failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("confidence parameter delta = {0} must lie in (0, 1)")]
    InvalidDelta(f64),

    #[error("{name} = {value} must be {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("weights must be finite, nonnegative and sum to 1 (sum = {sum})")]
    NotADistribution { sum: f64 },

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("{0}")]
    Incompatible(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            requirement,
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}
