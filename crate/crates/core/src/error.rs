use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("cannot parse `{token}` in row {row}, column `{column}`")]
    ParseError {
        /// 1-based data row (the header is row 0).
        row: usize,
        column: String,
        token: String,
    },

    #[error("input contains no data rows")]
    EmptyFile,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("no row has both x and y present")]
    AllMissing,

    #[error("x and y have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },

    #[error("dataset has missing entries; impute or drop them first")]
    Incomplete,

    #[error("value at index {index} is outside the model domain")]
    DomainError { index: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series of length {len} is shorter than the window of {window}")]
    TooShort { len: usize, window: usize },

    #[error("no observed values")]
    NoObservedValues,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("nothing to plot")]
    EmptyData,

    #[error("cannot write output: {0}")]
    WriteError(String),

    #[error("unknown model `{name}`; valid names: {valid}")]
    UnknownModel { name: String, valid: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
