use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),

    #[error("metric axioms violated: {0}")]
    NotAMetric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("space has {n} points; exact covering search is limited to {max_n}, use the greedy cover")]
    TooLarge { n: usize, max_n: usize },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
