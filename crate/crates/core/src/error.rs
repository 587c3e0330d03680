//! Error type shared across the engine.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A file does not match one of the four documented CSV layouts.
    #[error("{file}: {message}")]
    Schema { file: String, message: String },

    /// A cell failed to parse; coordinates are 1-based data-row numbers.
    #[error("{file}: row {row}, column '{column}': {message}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    /// A risk level outside {Low, Medium, High}.
    #[error("unknown risk level '{value}' at row {row}")]
    UnknownLevel { value: String, row: usize },

    /// Imputation has no statistic to work from.
    #[error("column '{column}' has no present values to impute from")]
    EmptyColumn { column: String },

    /// Joining yearly series produced no common years.
    #[error("year join is empty; enable linear interpolation (--interpolate-years) to align sparse series")]
    EmptyYearJoin,

    /// Precondition violation on an operation argument.
    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
