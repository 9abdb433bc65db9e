use thiserror::Error;

/// Failures raised by the laboratory.
///
/// Configuration problems (`InvalidConfig`, `InvalidParameter`) are kept apart
/// from numerical ones so front ends can map them to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root not bracketed while inverting the lift at target {target}")]
    RootNotBracketed { target: f64 },

    #[error("non-hyperbolic periodic orbit of period {period} (multiplier {multiplier})")]
    NeutralOrbit { period: usize, multiplier: f64 },

    #[error("map has no attracting basin interval")]
    NoBasin,

    /// The point is not in `F^step(B)`; `step` counts preimages, starting at 1.
    #[error("point is not in the image of the solid torus at step {step}")]
    NotInImage { step: usize },

    #[error("{candidates} preimage candidates land in the fiber disk")]
    InjectivityViolation { candidates: usize },

    #[error("work budget exceeded: {required} items requested, limit {limit}")]
    BudgetExceeded { required: u64, limit: u64 },

    #[error("itinerary is incompatible at index {index} (residual {residual:e})")]
    IncompatibleItinerary { index: usize, residual: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),
}

impl Error {
    /// True for errors caused by the caller's configuration rather than by
    /// numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::InvalidParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
