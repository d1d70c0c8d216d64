use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    GraphInvalid(String),

    #[error("harmonic solver did not converge: residual {residual:e} after {iterations} iterations (tol {tol:e})")]
    NonConvergence {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    #[error("aborted after {steps} steps without settling")]
    AbortedMaxSteps { steps: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mechanism index {index} out of range for vertex {vertex} of degree {degree}")]
    IndexOutOfRange {
        vertex: usize,
        index: usize,
        degree: usize,
    },

    #[error("vertex {0} is a sink and carries no rotor")]
    SinkHasNoRotor(usize),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("adjacency orders cannot be expressed as a single edge sequence")]
    NotRealizable,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
