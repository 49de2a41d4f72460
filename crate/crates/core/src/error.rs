use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Cholesky pivot fell below the relative threshold.
    #[error("degenerate Gram matrix: pivot {pivot:e} at row {row} below threshold {threshold:e}")]
    DegenerateGram {
        row: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("solver did not converge after {iterations} sweeps (relative duality gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("training data is not linearly separable (minimum margin {min_margin:e})")]
    NotSeparable { min_margin: f64 },

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("exact risk requires Gaussian entries, model uses {0}")]
    NotExact(String),

    #[error("logistic loss increased for 3 consecutive checkpoints (last at iteration {iteration})")]
    StepTooLarge { iteration: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad configuration or I/O rather than the
    /// numerics themselves.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_))
    }
}
