use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Cauchy parameters: location {a}, scale {gamma}")]
    InvalidParams { a: f64, gamma: f64 },

    #[error("empty or non-finite sample")]
    InvalidSample,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("degenerate sample: all values are equal")]
    DegenerateSample,

    #[error("no convergence after {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize },

    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("patch sides differ: {0} vs {1}")]
    SideMismatch(usize, usize),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image too small: {width}x{height}, need at least {min} on each side")]
    TooSmall { width: usize, height: usize, min: usize },

    #[error("no constant regions found down to block size {min_block}")]
    NoConstantRegions { min_block: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
