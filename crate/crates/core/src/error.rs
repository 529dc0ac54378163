use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing regime parameter `{0}`")]
    MissingParameter(&'static str),

    /// The requested hypothesis set falls outside every proven case.
    #[error("regime not covered: {0}")]
    NotCovered(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate}, error {error:e})")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("coordinate descent stopped after {sweeps} sweeps with max change {last_change:e}")]
    NonConvergence {
        sweeps: usize,
        last_change: f64,
        iterate: Vec<f64>,
    },

    #[error("adaptive weights undefined: least-squares component {0} is zero")]
    UndefinedWeights(usize),

    #[error("unsupported comparison: {0}")]
    UnsupportedComparison(String),

    #[error("simulation aborted: {failures} of {reps} replications failed")]
    TooManyFailures { failures: usize, reps: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
