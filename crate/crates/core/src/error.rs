use thiserror::Error;

use crate::bounds::BoundsTrace;

pub type Result<T, E = GepError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GepError {
    #[error("invalid instance field `{field}`: {reason}")]
    InvalidInstance { field: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("time-series ingestion error at row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("objective is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("optimality gap undefined for ub = {ub}, lb = {lb}")]
    UndefinedGap { ub: f64, lb: f64 },

    #[error("refusing to enumerate 2^{0} binary assignments")]
    TooManyBinaries(usize),

    #[error("run aborted after {} records: {message}", trace.records.len())]
    Aborted {
        message: String,
        trace: Box<BoundsTrace>,
    },
}

impl GepError {
    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        GepError::InvalidInstance {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
