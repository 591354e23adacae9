use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("exponents must be distinct and nonzero (got a = {a}, b = {b})")]
    InvalidExponents { a: i64, b: i64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("table index {index} out of range (length {len})")]
    TableIndexOutOfRange { index: u64, len: usize },

    #[error("weight table too short: need {needed} values, have {len}")]
    TableTooShort { needed: u64, len: usize },

    #[error("sequence too short: need {needed} values, have {len}")]
    SequenceTooShort { needed: usize, len: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("order k = {0} is outside the supported range 1..=4")]
    UnsupportedOrder(usize),

    #[error("frequency grid of {size} points exceeds the limit of {limit}; increase epsilon")]
    GridTooLarge { size: u128, limit: u128 },

    #[error("precision limit: {0}")]
    PrecisionLimit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule must be a nonempty strictly increasing list of positive lengths")]
    InvalidSchedule,

    #[error("table file {path}: {message}")]
    TableFormat { path: String, message: String },

    #[error("config {path}:{line}:{column}: {message}")]
    ConfigParse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
