//! Error type for the benchmark harness.

use std::fmt;

/// Anything that can fail while loading configurations, running
/// campaigns, or aggregating their outputs.
#[derive(Debug)]
pub enum BenchError {
    /// A file could not be read or written.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// A configuration file is not valid JSON.
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// A configuration field failed validation.
    InvalidConfig { field: &'static str, message: String },
    /// The solver library rejected a model, problem, or run setting.
    Solver(ssca::Error),
    /// A campaign directory is missing files a command needs.
    MissingData(String),
    /// A trace or summary file exists but cannot be interpreted.
    Malformed { path: String, message: String },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Io { path, source } => write!(f, "{path}: {source}"),
            BenchError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{path}: parse error at line {line}, column {column}: {message}"),
            BenchError::InvalidConfig { field, message } => {
                write!(f, "invalid config field `{field}`: {message}")
            }
            BenchError::Solver(e) => write!(f, "solver: {e}"),
            BenchError::MissingData(what) => write!(f, "missing data: {what}"),
            BenchError::Malformed { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for BenchError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            BenchError::Io { source, .. } => Some(source),
            BenchError::Solver(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ssca::Error> for BenchError {
    fn from(e: ssca::Error) -> Self {
        BenchError::Solver(e)
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, BenchError>;
