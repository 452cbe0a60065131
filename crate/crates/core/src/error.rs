use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("axis {axis} out of range for a grid with {m} axes")]
    AxisOutOfRange { axis: usize, m: usize },
    #[error("repeated axis {0}")]
    RepeatedAxis(usize),
    #[error("empty axis subset")]
    EmptySubset,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no children: interval at the finest level of axis {0}")]
    NoChildren(usize),
    #[error("offset overflow on axis {0}")]
    OffsetOverflow(usize),
    #[error("K not common ancestor on axis {0}")]
    NotCommonAncestor(usize),
    #[error("not a weight: entry {index} is {value}")]
    NotAWeight { index: usize, value: f64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("inadmissible coefficient: {0}")]
    Inadmissible(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("empty test family")]
    EmptyTestFamily,
    #[error("trivial test function")]
    TrivialTestFunction,
    #[error("term shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
