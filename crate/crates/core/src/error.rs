use thiserror::Error;

/// Errors raised by the core operations.
///
/// Integrator terminations (collision approach, step failure, step budget)
/// are not errors: they are reported on the returned trajectory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("masses must be positive and finite, got {0:?}")]
    InvalidMasses([f64; 3]),

    #[error("bodies {0} and {1} coincide (distance {2:e})")]
    CollisionInput(usize, usize, f64),

    #[error("bodies {0} and {1} are closer than the collision threshold (distance {2:e})")]
    CollisionApproach(usize, usize, f64),

    #[error("energy must be negative, got H = {0}")]
    NotNegativeEnergy(f64),

    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("no sign change on [{0}, {1}]")]
    NoSignChange(f64, f64),

    #[error("state is not collinear (|delta1| = {0:e})")]
    NotASyzygy(f64),

    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("trajectory is not periodic (residual {0:e})")]
    NotPeriodic(f64),

    #[error("window [{0}, {1}] contains a zero of delta1")]
    WindowInvalid(f64, f64),

    #[error("sampler exhausted after {0} attempts")]
    SamplerExhausted(usize),

    #[error("integration ended early: {0:?}")]
    Terminated(crate::integrator::Termination),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
