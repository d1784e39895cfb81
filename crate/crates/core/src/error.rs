use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has {got} bits but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what}: n = {n} exceeds the limit of {limit} vertices")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {msg} (condition estimate {condition:.3e})")]
    Numerical { msg: String, condition: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
