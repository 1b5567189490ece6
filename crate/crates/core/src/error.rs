use thiserror::Error;

/// Errors raised by the geometry, solver and Fuchsian layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate tangent at s = {s}: |γ'| = {speed:e}")]
    DegenerateTangent { s: f64, speed: f64 },

    #[error("grid too coarse: no interior node (h = {spacing}, trim = {trim})")]
    EmptyGrid { spacing: f64, trim: f64 },

    #[error("collar chart rejected: {0}")]
    ChartRejected(String),

    #[error("overflow guard: 2u = {value:.3} exceeds 700 at unknown {node}")]
    Overflow { node: usize, value: f64 },

    #[error("linear solver breakdown: {0}")]
    LinearSolver(String),

    #[error("fixed-point map is not contractive: estimated factor {factor:.4}")]
    NotContractive { factor: f64 },

    #[error("fixed-point iteration stalled after {iterations} iterations (last step {last_step:e})")]
    FixedPointStalled { iterations: usize, last_step: f64 },

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("period mismatch at the Y ends: max |k(T,-θ) - k(T,θ)| = {0:e}")]
    PeriodMismatch(f64),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
