//! Per-iteration run records and the sink abstraction that lets callers
//! stream them (e.g. to CSV) while the driver also keeps them in memory.

use crate::error::{Error, Result};

/// One outer iteration's worth of diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// Outer iteration index, starting at 1.
    pub t: usize,
    /// Iterate after averaging (always feasible).
    pub x: Vec<f64>,
    /// Cheap objective proxy: the surrogate objective at `x` (the mean of
    /// the per-block surrogates for the block-parallel driver). Tracks the
    /// true expectation increasingly well as the forgetting factor decays.
    pub objective_estimate: f64,
    /// L1 norm of the recovered subproblem slacks.
    pub slack_sum: f64,
    /// `|x_bar - x_prev|_inf`: distance from the iterate to the subproblem
    /// solution before averaging.
    pub step_gap: f64,
    /// Stopping residual at this iteration: `max(step_gap, deviation of
    /// slack_sum from its 50-iteration window mean)`.
    pub residual: f64,
    /// Wall-clock seconds since the run started. Excluded from determinism
    /// comparisons.
    pub elapsed_s: f64,
}

/// Receives rows as the driver produces them.
///
/// Implementations must not reorder or drop rows; errors abort the run.
pub trait TraceSink {
    fn record(&mut self, row: &TraceRow) -> Result<()>;
}

/// Sink that discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _row: &TraceRow) -> Result<()> {
        Ok(())
    }
}

/// In-memory trace of a full run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterateTrace {
    rows: Vec<TraceRow>,
}

impl IterateTrace {
    pub fn new() -> Self {
        IterateTrace { rows: Vec::new() }
    }

    /// Appends a row, enforcing strictly increasing `t` and nonnegative
    /// slack.
    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::IterationOutOfRange(row.t));
            }
        }
        if !(row.slack_sum >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "negative slack sum {} at iteration {}",
                row.slack_sum, row.t
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when every non-timing field of every row matches. Wall-clock
    /// columns differ across runs by nature, so determinism checks use
    /// this instead of `==`.
    pub fn same_path(&self, other: &IterateTrace) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(other.rows.iter()).all(|(a, b)| {
                a.t == b.t
                    && a.x == b.x
                    && a.objective_estimate == b.objective_estimate
                    && a.slack_sum == b.slack_sum
                    && a.step_gap == b.step_gap
                    && a.residual == b.residual
            })
    }
}

impl TraceSink for IterateTrace {
    fn record(&mut self, row: &TraceRow) -> Result<()> {
        self.push(row.clone())
    }
}
