//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or inconsistent configuration (unknown scorer, malformed spec, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Invalid argument value (fraction out of range, alpha <= 0, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Input file is missing a required column.
    #[error("schema error: missing column `{column}` in {path}")]
    Schema { column: String, path: String },

    /// A cell failed to parse; `row` is 1-based over data rows.
    #[error("parse error at {path} row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    /// Dataset violates an invariant (duplicate ligand id, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Metric is undefined on this input (no actives, single class, ...).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Input shape is valid but unsupported by this operation.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    /// Matrix/parameter dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Dataset cannot be split as requested.
    #[error("split error: {0}")]
    Split(String),

    /// Training failed (non-finite loss, ...).
    #[error("training error: {0}")]
    Training(String),

    /// Model/config (de)serialization failed.
    #[error("serialization error: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code taxonomy for the CLI: 2 = config, 3 = data, 1 = internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Training(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
