//! Convergence-curve extraction: turns a finished campaign directory into
//! a single plot-ready table of relative-error quantiles per iteration.
//!
//! Each path's curve is the relative error of its recorded iterate against
//! that path's own reference point. Paths that stopped early hold their
//! final value, so every curve spans the full iteration axis before the
//! quantiles are taken.

use std::path::Path;

use crate::campaign::{read_summary, relative_error, trace_file_name, CampaignSummary};
use crate::csvio;
use crate::error::{BenchError, Result};
use crate::stats;

/// Column names of the emitted plot table.
pub const PLOT_COLUMNS: [&str; 6] = [
    "t",
    "median_rel_err",
    "q1_rel_err",
    "q3_rel_err",
    "min_rel_err",
    "max_rel_err",
];

/// One row of the plot table: the relative-error spread at iteration `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub t: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-path relative-error curves from a campaign's traces and records.
pub fn relative_error_curves(
    summary: &CampaignSummary,
    campaign_dir: &Path,
) -> Result<Vec<Vec<f64>>> {
    if summary.records.is_empty() {
        return Err(BenchError::MissingData(format!(
            "campaign at {} has no path records",
            campaign_dir.display()
        )));
    }
    let mut curves = Vec::with_capacity(summary.records.len());
    for record in &summary.records {
        let trace_path = campaign_dir.join(trace_file_name(record.path));
        let rows = csvio::read_trace(&trace_path)?;
        if rows.iter().any(|r| r.x.is_empty()) {
            return Err(BenchError::MissingData(format!(
                "{} has no iterate columns; rerun the campaign with keep_iterates = true",
                trace_path.display()
            )));
        }
        let curve: Vec<f64> = rows
            .iter()
            .map(|r| relative_error(&r.x, &record.p_star))
            .collect();
        if curve.is_empty() {
            return Err(BenchError::MissingData(format!(
                "{} holds an empty trace",
                trace_path.display()
            )));
        }
        curves.push(curve);
    }
    Ok(curves)
}

/// Aligns curves with hold-last extension and takes per-iteration
/// quantiles: median, quartiles, and the min/max envelope.
pub fn quantile_rows(curves: &[Vec<f64>]) -> Vec<PlotRow> {
    let horizon = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(horizon);
    let mut column = vec![0.0; curves.len()];
    for t in 0..horizon {
        for (j, curve) in curves.iter().enumerate() {
            column[j] = curve[t.min(curve.len() - 1)];
        }
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        rows.push(PlotRow {
            t: t + 1,
            median: stats::quantile_sorted(&column, 0.5),
            q1: stats::quantile_sorted(&column, 0.25),
            q3: stats::quantile_sorted(&column, 0.75),
            min: column[0],
            max: column[column.len() - 1],
        });
    }
    rows
}

/// Reads a campaign directory and writes the plot table to `out` as CSV.
pub fn emit_plot_data(campaign_dir: &Path, out: &Path) -> Result<()> {
    let summary = read_summary(campaign_dir)?;
    let curves = relative_error_curves(&summary, campaign_dir)?;
    let rows = quantile_rows(&curves);

    let mut w = csv::Writer::from_path(out).map_err(|e| BenchError::Malformed {
        path: out.display().to_string(),
        message: e.to_string(),
    })?;
    let werr = |e: csv::Error| BenchError::Malformed {
        path: out.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(PLOT_COLUMNS).map_err(werr)?;
    for r in &rows {
        w.write_record([
            r.t.to_string(),
            r.median.to_string(),
            r.q1.to_string(),
            r.q3.to_string(),
            r.min.to_string(),
            r.max.to_string(),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: out.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::run_campaign;
    use crate::config::ExperimentConfig;

    #[test]
    fn a_single_curve_is_its_own_median_and_envelope() {
        let curves = vec![vec![1.0, 0.5, 0.25, 0.125]];
        let rows = quantile_rows(&curves);
        assert_eq!(rows.len(), 4);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.t, i + 1);
            assert_eq!(row.median, curves[0][i]);
            assert_eq!(row.q1, curves[0][i]);
            assert_eq!(row.q3, curves[0][i]);
            assert_eq!(row.min, curves[0][i]);
            assert_eq!(row.max, curves[0][i]);
        }
    }

    #[test]
    fn short_curves_hold_their_last_value() {
        // Four constant curves at 1, 2, 3, 4; the level-1 curve stops
        // after one entry and must keep contributing its held value.
        let curves = vec![vec![1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]];
        let rows = quantile_rows(&curves);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.median, 2.5);
            assert_eq!(row.q1, 1.75);
            assert_eq!(row.q3, 3.25);
            assert_eq!(row.min, 1.0);
            assert_eq!(row.max, 4.0);
        }
    }

    #[test]
    fn toy_campaign_produces_a_plot_table_that_ends_low() {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut cfg: ExperimentConfig =
            serde_json::from_str(r#"{ "problem": "toy" }"#).expect("valid");
        cfg.paths = 3;
        cfg.reference_iters = 200;
        cfg.run.max_outer_iters = 60;
        cfg.run.seed = 5;
        run_campaign(&cfg, dir.path()).expect("campaign runs");

        let out = dir.path().join("plot.csv");
        emit_plot_data(dir.path(), &out).expect("plot data emits");

        let text = std::fs::read_to_string(&out).expect("plot file");
        let mut lines = text.lines();
        assert_eq!(
            lines.next().expect("header"),
            "t,median_rel_err,q1_rel_err,q3_rel_err,min_rel_err,max_rel_err"
        );
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 60);
        let median_at = |line: &str| -> f64 {
            line.split(',').nth(1).expect("median column").parse().expect("number")
        };
        let first = median_at(body[0]);
        let last = median_at(body[body.len() - 1]);
        assert!(last < 0.02, "final median {last} should sit under the threshold");
        assert!(last < first);
    }

    #[test]
    fn an_empty_directory_reports_missing_data() {
        let dir = tempfile::tempdir().expect("tempdir");
        let out = dir.path().join("plot.csv");
        let err = emit_plot_data(dir.path(), &out).expect_err("nothing to plot");
        assert!(matches!(err, BenchError::MissingData(_)));
    }
}
