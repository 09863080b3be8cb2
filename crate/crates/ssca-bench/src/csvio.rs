//! Per-path trace files: a stable CSV schema, written and read back.
//!
//! The first six columns are always `t,objective,slack_sum,step_gap,
//! residual,elapsed_s`; when full iterates are kept, `x_1..x_n` follow.
//! Floats are written in Rust's shortest round-trip form, so a file read
//! back reproduces the original values bit for bit.

use std::path::Path;

use ssca::TraceRow;

use crate::error::{BenchError, Result};

/// The fixed leading columns of every trace file.
pub const TRACE_COLUMNS: [&str; 6] = [
    "t",
    "objective",
    "slack_sum",
    "step_gap",
    "residual",
    "elapsed_s",
];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `rows` to `path`, appending `x_1..x_n` columns when
/// `keep_iterates` is set.
pub fn write_trace(path: &Path, rows: &[TraceRow], keep_iterates: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let dim = rows.first().map_or(0, |r| r.x.len());
    let mut header: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if keep_iterates {
        for d in 0..dim {
            header.push(format!("x_{}", d + 1));
        }
    }
    w.write_record(&header).map_err(csv_err(path))?;
    let mut record = Vec::with_capacity(header.len());
    for row in rows {
        record.clear();
        record.push(row.t.to_string());
        record.push(row.objective_estimate.to_string());
        record.push(row.slack_sum.to_string());
        record.push(row.step_gap.to_string());
        record.push(row.residual.to_string());
        record.push(row.elapsed_s.to_string());
        if keep_iterates {
            for v in &row.x {
                record.push(v.to_string());
            }
        }
        w.write_record(&record).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a trace file back into rows. Files written without iterates give
/// rows with empty `x`.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let malformed = |message: String| BenchError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.len() < TRACE_COLUMNS.len() {
        return Err(malformed(format!(
            "expected at least {} columns, found {}",
            TRACE_COLUMNS.len(),
            header.len()
        )));
    }
    for (want, got) in TRACE_COLUMNS.iter().zip(header.iter()) {
        if want != &got {
            return Err(malformed(format!(
                "unexpected column `{got}` where `{want}` belongs"
            )));
        }
    }
    let dim = header.len() - TRACE_COLUMNS.len();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err(path))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| malformed(format!("row {} is short", rows.len() + 1)))?
                .parse::<f64>()
                .map_err(|e| malformed(format!("row {}: {e}", rows.len() + 1)))
        };
        let t = record
            .get(0)
            .ok_or_else(|| malformed("empty row".into()))?
            .parse::<usize>()
            .map_err(|e| malformed(format!("row {}: {e}", rows.len() + 1)))?;
        let mut x = Vec::with_capacity(dim);
        for d in 0..dim {
            x.push(field(TRACE_COLUMNS.len() + d)?);
        }
        rows.push(TraceRow {
            t,
            x,
            objective_estimate: field(1)?,
            slack_sum: field(2)?,
            step_gap: field(3)?,
            residual: field(4)?,
            elapsed_s: field(5)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<TraceRow> {
        (1..=3)
            .map(|t| TraceRow {
                t,
                x: vec![0.1 * t as f64, 2.0 / t as f64],
                objective_estimate: 1.0 / t as f64,
                slack_sum: 0.0,
                step_gap: 0.5f64.powi(t as i32),
                residual: 0.6f64.powi(t as i32),
                elapsed_s: 0.001 * t as f64,
            })
            .collect()
    }

    #[test]
    fn roundtrip_preserves_every_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let rows = sample_rows();
        write_trace(&path, &rows, true).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn header_schema_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&path, &sample_rows(), true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "t,objective,slack_sum,step_gap,residual,elapsed_s,x_1,x_2");

        write_trace(&path, &sample_rows(), false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,objective,slack_sum,step_gap,residual,elapsed_s"
        );
    }

    #[test]
    fn alien_headers_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strange.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        match read_trace(&path) {
            Err(BenchError::Malformed { .. }) => {}
            other => panic!("expected malformed, got {other:?}"),
        }
    }
}
