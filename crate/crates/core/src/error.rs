use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("invalid noise model: {0}")]
    InvalidNoise(&'static str),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(&'static str),

    #[error("uncertainty covariance of anchor {anchor} is singular (condition number {condition:e})")]
    SingularCovariance { anchor: usize, condition: f64 },

    #[error("Fisher information matrix is singular (condition number {0:e})")]
    SingularFim(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("input length mismatch: {anchors} anchors but {measurements} measurements")]
    LengthMismatch { anchors: usize, measurements: usize },

    #[error("every anchor weight is singular")]
    AllWeightsSingular,

    #[error("scenario generation failed after {0} retries")]
    GenerationFailed(usize),

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("invalid sweep: {0}")]
    InvalidSweep(&'static str),
}
