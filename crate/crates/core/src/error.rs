use thiserror::Error;

/// Numerical and model errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("segment {index} ({name}) is invalid: {reason}")]
    InvalidSegment {
        index: usize,
        name: String,
        reason: String,
    },

    #[error("mass closure violated: segment masses sum to {sum} kg but total mass is {total} kg")]
    MassClosure { sum: f64, total: f64 },

    #[error("COM velocity is degenerate (speed {speed:e} m/s); direction undefined")]
    DegenerateVelocity { speed: f64 },

    #[error("frame index {index} is out of range for central differencing over {len} frames")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("frame times are not strictly increasing around frame {index}")]
    NonIncreasingTime { index: usize },

    #[error("virtual chain is singular: {quantity} = {value:e} below threshold")]
    SingularChain { quantity: &'static str, value: f64 },

    #[error("J*J^T is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("torque vector has zero norm")]
    ZeroTorque,

    #[error("no eligible grid point: every candidate is singular or breaks a robot limit")]
    NoFeasiblePoint,

    #[error("invalid joint limits: {0}")]
    InvalidLimits(String),

    #[error("invalid objective configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid robot parameters: {0}")]
    InvalidRobot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
