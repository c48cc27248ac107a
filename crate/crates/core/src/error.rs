use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("column length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("parameter {value} outside the domain of the {family} family")]
    ParameterDomain { family: &'static str, value: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("bound became non-finite at iteration {iteration} (last finite values: {recent:?})")]
    NonFiniteBound { iteration: usize, recent: Vec<f64> },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulation blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("numeric inverse did not converge (target {target}, conditioning {cond})")]
    NoConvergence { target: f64, cond: f64 },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
