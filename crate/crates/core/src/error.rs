use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum FtsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("samples are evaluated on different grids")]
    GridMismatch,

    #[error("sample lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("lag horizon H={horizon} must be smaller than the sample size n={n}")]
    HorizonTooLarge { horizon: usize, n: usize },

    #[error("lag horizon must be at least 1")]
    InvalidHorizon,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("estimated variance {sigma2:e} is at or below the floor {floor:e}; the test is undefined for degenerate input")]
    DegenerateVariance { sigma2: f64, floor: f64 },

    #[error("autoregressive operator with q={q} has Hilbert-Schmidt norm {norm:.4} >= 1; the process is not stationary")]
    NonStationaryKernel { q: f64, norm: f64 },

    #[error("invalid simulation parameter: {0}")]
    InvalidDgp(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("nonpositive price {price} at line {line}")]
    InvalidPrice { line: usize, price: f64 },

    #[error("day has {points} observation(s); at least 2 are needed")]
    DaySkipped { points: usize },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type FtsResult<T> = Result<T, FtsError>;
