use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mode split: {0}")]
    InvalidSplit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Every singular value was truncated away.
    #[error("rank zero: {0}")]
    RankZero(String),

    #[error("tensor with {requested} elements exceeds the element budget of {budget}")]
    ElementBudget { requested: usize, budget: usize },

    #[error("eigenvalue {0} is zero")]
    ZeroEigenvalue(Complex64),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("unknown station `{station}` (line {line})")]
    UnknownStation { station: String, line: usize },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("index {index} out of range for {len} items")]
    Index { index: usize, len: usize },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
