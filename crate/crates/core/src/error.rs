use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("feasible action enumeration exceeds cap of {cap}")]
    ActionLimit { cap: usize },

    #[error("truncated state space has {size} states, cap is {cap}")]
    StateSpaceLimit { size: u128, cap: usize },

    #[error("state {0:?} is outside the truncated state space")]
    UnknownState(Vec<u32>),

    #[error("state index {index} out of range for {count} states")]
    StateIndex { index: usize, count: usize },

    #[error("action index {index} out of range for state with {count} actions")]
    UnknownAction { index: usize, count: usize },

    #[error("prior assigns zero mass to action {0} after smoothing")]
    ZeroPriorMass(usize),

    #[error("iterative solver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("action vector has invalid entry {0}")]
    InvalidAction(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
