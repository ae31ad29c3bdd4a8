use std::fmt;

use thiserror::Error;

/// A single rejected field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("missing field `{field}`")]
    Missing { field: String },
    #[error("field `{field}`: `{value}` is not a valid number")]
    NotNumeric { field: String, value: String },
    #[error("field `{field}`: value {value} outside domain {allowed:?}")]
    OutOfDomain {
        field: String,
        value: String,
        allowed: Vec<i32>,
    },
    #[error("field `{field}`: value {value} must be finite and non-negative")]
    Negative { field: String, value: String },
}

/// Every problem found while validating one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid case: {0}")]
    Validation(#[from] ValidationErrors),

    #[error("row {row}: {source}")]
    Row {
        /// 1-based data row number (the header is row 0).
        row: usize,
        source: ValidationErrors,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("degenerate split: {n} cases with train fraction {fraction} gives {train} train / {test} test")]
    DegenerateSplit {
        n: usize,
        fraction: f64,
        train: usize,
        test: usize,
    },

    #[error("invalid train fraction {0}; must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("case {0} has no target")]
    MissingTarget(usize),

    #[error("malformed case base: {0}")]
    MalformedCaseBase(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
