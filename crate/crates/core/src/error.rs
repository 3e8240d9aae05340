use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("entry ({row}, {col}) outside declared {rows}x{cols} bounds")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("duplicate coordinate ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("private plan requires a noise matrix")]
    MissingNoise,

    #[error("expected {expected} survivors, got {got}")]
    SurvivorCount { expected: usize, got: usize },

    #[error("unrecoverable survivor subset {survivors:?}: decoding matrix is singular")]
    Singular { survivors: Vec<usize> },

    #[error("enumeration of {subsets} subsets exceeds budget of {budget}")]
    BudgetExceeded { subsets: u128, budget: u128 },

    #[error("all {0} trials produced structurally singular plans")]
    AllTrialsSingular(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag for machine consumption.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::IndexOutOfBounds { .. } => "index-out-of-bounds",
            Error::DuplicateEntry { .. } => "duplicate-entry",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::InvalidParams(_) => "invalid-params",
            Error::InvalidPlan(_) => "invalid-plan",
            Error::MissingNoise => "missing-noise",
            Error::SurvivorCount { .. } => "survivor-count",
            Error::Singular { .. } => "unrecoverable-subset",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::AllTrialsSingular(_) => "all-trials-singular",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
