//! Crate-wide error type.
//!
//! All fallible operations in this crate return [`Error`]. Variants carry
//! enough context (indices, offending values) to diagnose a bad problem
//! definition or a numerical failure without a debugger.

use std::fmt;

/// Errors produced by problem construction, surrogate updates, subproblem
/// solves, and driver runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector had the wrong length for the operation.
    DimensionMismatch { expected: usize, got: usize },
    /// A box feasible set had `lower[i] > upper[i]` or a non-finite bound.
    InvalidBounds { index: usize },
    /// Block ranges do not partition `0..n` contiguously and in order.
    InvalidBlocks(String),
    /// The operation requires a block structure but the problem has none.
    MissingBlocks,
    /// A stepsize schedule parameter is outside its valid range.
    InvalidSchedule(String),
    /// A schedule was evaluated at iteration `t < 1`.
    IterationOutOfRange(usize),
    /// A per-iteration weight fell outside `(0, 1]`.
    WeightOutOfRange(f64),
    /// The penalty coefficient must be positive (and growth factor >= 1).
    InvalidPenalty(String),
    /// A surrogate evaluated to a non-finite value. `constraint` is `None`
    /// for the objective surrogate, `Some(i)` for the i-th constraint.
    NonFiniteSurrogate { constraint: Option<usize> },
    /// An inner-solver configuration field is invalid.
    InvalidSolverConfig(String),
    /// A run configuration field is invalid.
    InvalidRunConfig(String),
    /// Problem definition is incomplete or inconsistent.
    InvalidProblem(String),
    /// A model parameter failed validation; `field` names the parameter
    /// and `index` the offending entry.
    InvalidModel { field: &'static str, index: usize },
    /// A driver-level failure at a specific outer iteration.
    AtIteration { iteration: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidBounds { index } => {
                write!(f, "invalid box bounds at coordinate {index}")
            }
            Error::InvalidBlocks(msg) => write!(f, "invalid block structure: {msg}"),
            Error::MissingBlocks => {
                write!(f, "operation requires a block structure, but none is defined")
            }
            Error::InvalidSchedule(msg) => write!(f, "invalid stepsize schedule: {msg}"),
            Error::IterationOutOfRange(t) => {
                write!(f, "iteration index must be >= 1, got {t}")
            }
            Error::WeightOutOfRange(w) => {
                write!(f, "per-iteration weight must lie in (0, 1], got {w}")
            }
            Error::InvalidPenalty(msg) => write!(f, "invalid penalty configuration: {msg}"),
            Error::NonFiniteSurrogate { constraint } => match constraint {
                Some(i) => write!(f, "constraint surrogate {i} evaluated to a non-finite value"),
                None => write!(f, "objective surrogate evaluated to a non-finite value"),
            },
            Error::InvalidSolverConfig(msg) => write!(f, "invalid solver configuration: {msg}"),
            Error::InvalidRunConfig(msg) => write!(f, "invalid run configuration: {msg}"),
            Error::InvalidProblem(msg) => write!(f, "invalid problem definition: {msg}"),
            Error::InvalidModel { field, index } => {
                write!(f, "invalid model parameter {field}[{index}]")
            }
            Error::AtIteration { iteration, source } => {
                write!(f, "at outer iteration {iteration}: {source}")
            }
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_names_the_constraint_index() {
        let e = Error::NonFiniteSurrogate { constraint: Some(3) };
        assert!(e.to_string().contains("constraint surrogate 3"));
        let e = Error::NonFiniteSurrogate { constraint: None };
        assert!(e.to_string().contains("objective"));
    }

    #[test]
    fn iteration_context_wraps_source() {
        let e = Error::AtIteration {
            iteration: 17,
            source: Box::new(Error::WeightOutOfRange(1.5)),
        };
        let s = e.to_string();
        assert!(s.contains("17") && s.contains("1.5"));
    }
}
