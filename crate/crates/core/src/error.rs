use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Input data parsed but violated a contract.
    Validation,
    /// File system or syntax error while reading/writing.
    Io,
    /// A required external artifact (matrix, annotations) is absent.
    MissingInput,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("record {record}: {rule}")]
    Invalid { record: String, rule: String },

    #[error("text too short: {sentences} sentences, need at least {required}")]
    TextTooShort { sentences: usize, required: usize },

    #[error("cannot place spans: {0}")]
    CannotPlaceSpans(String),

    #[error("empty text")]
    EmptyText,

    #[error("symbol collision: boundary symbol {symbol:?} occurs inside sentence {index}")]
    SymbolCollision { symbol: String, index: usize },

    #[error("empty replacement")]
    EmptyReplacement,

    #[error("empty token list")]
    EmptyTokens,

    #[error("invalid parse tree: {0}")]
    TreeParse(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("no similarity matrix for record {0}")]
    MissingSimilarity(String),

    #[error("record {record}: matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        record: String,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("missing annotations for record {record} ({side})")]
    MissingAnnotations { record: String, side: String },

    #[error("missing required input: {0}")]
    MissingInput(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn invalid(record: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Invalid {
            record: record.into(),
            rule: rule.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::Json { .. } | Error::Format { .. } => ErrorClass::Io,
            Error::MissingSimilarity(_) | Error::MissingAnnotations { .. } | Error::MissingInput(_) => {
                ErrorClass::MissingInput
            }
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
