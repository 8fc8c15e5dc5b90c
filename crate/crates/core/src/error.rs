use thiserror::Error;

use crate::paramcore::ParamVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("geometric median did not converge within {iterations} iterations")]
    MedianNoConvergence {
        iterations: usize,
        last: ParamVector,
    },

    #[error("prox subproblem did not converge within {iterations} iterations (last step {last_step:e})")]
    ProxNoConvergence { iterations: usize, last_step: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at round {round}: non-finite master model")]
    Diverged { round: usize },

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures while reading dataset containers.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        file: String,
        expected: u32,
        found: u32,
    },

    #[error("{file}: truncated, need {needed} bytes but found {found}")]
    Truncated {
        file: String,
        needed: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("label {label} at index {index} is not below {num_classes}")]
    BadLabel {
        index: usize,
        label: u8,
        num_classes: usize,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
