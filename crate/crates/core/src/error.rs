use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:e} at ({row}, {col})")]
    NotSymmetric {
        max_asymmetry: f64,
        row: usize,
        col: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("size {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("bin {0} is present in one arm only")]
    UnmatchedBin(i64),
    #[error("resampling failed after {retries} redraws: {reason}")]
    Resample { retries: usize, reason: String },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
