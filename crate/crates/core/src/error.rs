use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate oracle: every mu_i is zero")]
    DegenerateOracle,

    #[error("no positive mu_i; the sample-complexity predictor is undefined")]
    NoPositiveMu,

    #[error("singular ridge system; use a strictly positive lambda")]
    SingularSystem,

    #[error("too few recovering grid points in eta window [{lo}, {hi}]: found {found}, need {need}")]
    InsufficientPoints {
        lo: f64,
        hi: f64,
        found: usize,
        need: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
