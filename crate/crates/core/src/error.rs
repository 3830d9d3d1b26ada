use std::path::PathBuf;

use thiserror::Error;

/// Failure reported by an [`AnomalyScorer`](crate::model::AnomalyScorer).
#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct ScoreError(pub String);

impl ScoreError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("header does not match schema: {0}")]
    SchemaMismatch(String),

    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    #[error("dataset is empty{0}")]
    EmptyDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature index {index} out of range for {n_features} features")]
    FeatureIndex { index: usize, n_features: usize },

    #[error("row index {index} out of range for {n_rows} rows")]
    RowIndex { index: usize, n_rows: usize },

    #[error("category `{value}` was not observed for feature `{feature}`")]
    UnseenCategory { feature: String, value: String },

    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("categorical feature `{0}` must be encoded before training an isolation forest")]
    CategoricalInput(String),

    #[error("degenerate score spread: need lo < threshold < hi, got lo={lo}, threshold={threshold}, hi={hi}")]
    DegenerateScores { lo: f64, threshold: f64, hi: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("labels are required for this operation")]
    MissingLabels,

    #[error("scorer failed{context}: {source}")]
    Scorer {
        context: String,
        #[source]
        source: ScoreError,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input rather than a runtime fault.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Scorer { .. } | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
