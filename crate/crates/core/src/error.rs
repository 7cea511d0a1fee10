use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
///
/// Variants are grouped by the stage that can recover from them: configuration
/// problems are caught before any compute, data problems carry enough context
/// to locate the offending cell, and numerical failures indicate a degenerate
/// intermediate result.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Cell {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0} variables exceed the exact enumeration budget of {1}; use a sampling explainer")]
    ShapBudget(usize, usize),

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_)
            | Error::Cell { .. }
            | Error::Dimension { .. }
            | Error::ShapBudget(..)
            | Error::Csv(_)
            | Error::MissingArtifact(_) => 3,
            Error::Numerical(_) => 4,
            Error::Io { .. } | Error::Json(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
