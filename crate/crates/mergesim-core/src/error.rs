//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("action space is empty at the current state")]
    EmptyActionSpace,

    #[error("singular boundary-value system: start and end times coincide")]
    SingularSystem,

    #[error("segment length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("trajectory shorter than requested comparison window ({have} < {need})")]
    HorizonExceeded { have: usize, need: usize },

    #[error("training diverged (loss is not finite) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("malformed {what} at row {row}: {msg}")]
    MalformedRecord {
        what: &'static str,
        row: usize,
        msg: String,
    },

    #[error("unsupported {what} format version {found} (expected {expected})")]
    FormatVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("tensor {name} has shape {found:?}, expected {expected:?}")]
    TensorShape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("vehicle {0} not found on the ramp")]
    VehicleNotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
