//! End-to-end tests of the `ssca-bench` binary: argument handling, file
//! layout, determinism, and error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ssca-bench"))
}

fn bundled_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Blanks one named column of a CSV text so wall-clock fields can be
/// ignored in byte comparisons.
fn mask_column(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let idx = header
        .split(',')
        .position(|h| h == column)
        .unwrap_or_else(|| panic!("column {column} not found in header {header}"));
    let mut masked = vec![header.to_string()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let rebuilt: Vec<&str> = fields
            .iter()
            .enumerate()
            .map(|(i, f)| if i == idx { "*" } else { *f })
            .collect();
        masked.push(rebuilt.join(","));
    }
    masked.join("\n")
}

#[test]
fn validate_accepts_every_bundled_config() {
    for name in [
        "toy_smoke.json",
        "coupled_five_pair.json",
        "decoupled_five_pair.json",
    ] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(bundled_config(name))
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{name}: {}", stderr_of(&out));
        assert!(stdout_of(&out).starts_with("config ok:"), "{name}");
    }
}

#[test]
fn validate_reports_json_errors_with_a_position() {
    let dir = tempfile::tempdir().expect("tempdir");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"problem\": \"toy\", }").expect("write");
    let out = bin()
        .args(["validate", "--config"])
        .arg(&bad)
        .output()
        .expect("binary runs");
    assert!(!out.status.success());
    let err = stderr_of(&out);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("line"), "stderr was: {err}");
}

#[test]
fn validate_rejects_unknown_keys_by_name() {
    let dir = tempfile::tempdir().expect("tempdir");
    let bad = dir.path().join("extra.json");
    std::fs::write(&bad, r#"{ "problem": "toy", "warp_factor": 9 }"#).expect("write");
    let out = bin()
        .args(["validate", "--config"])
        .arg(&bad)
        .output()
        .expect("binary runs");
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("warp_factor"));
}

#[test]
fn run_writes_traces_and_summaries() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["run", "--config"])
        .arg(bundled_config("toy_smoke.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("problem: toy"), "stdout was: {text}");
    assert!(text.contains("wrote"), "stdout was: {text}");

    for name in ["path_000.csv", "path_001.csv", "summary.csv", "summary.json"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let trace = std::fs::read_to_string(dir.path().join("path_000.csv")).expect("trace");
    let header = trace.lines().next().expect("header");
    assert_eq!(
        header,
        "t,objective,slack_sum,step_gap,residual,elapsed_s,x_1"
    );
    assert_eq!(trace.lines().count(), 81); // header + one row per iteration

    let summary = ssca_bench::campaign::read_summary(dir.path()).expect("summary parses");
    assert_eq!(summary.paths, 2);
    assert_eq!(summary.reference_iters, 160);
}

#[test]
fn reruns_are_identical_apart_from_wall_clock() {
    let dir_a = tempfile::tempdir().expect("tempdir");
    let dir_b = tempfile::tempdir().expect("tempdir");
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args(["run", "--config"])
            .arg(bundled_config("toy_smoke.json"))
            .arg("--out")
            .arg(dir.path())
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    for name in ["path_000.csv", "path_001.csv"] {
        let a = std::fs::read_to_string(dir_a.path().join(name)).expect("a");
        let b = std::fs::read_to_string(dir_b.path().join(name)).expect("b");
        assert_eq!(
            mask_column(&a, "elapsed_s"),
            mask_column(&b, "elapsed_s"),
            "{name} differs"
        );
    }
    let a = std::fs::read_to_string(dir_a.path().join("summary.csv")).expect("a");
    let b = std::fs::read_to_string(dir_b.path().join("summary.csv")).expect("b");
    assert_eq!(mask_column(&a, "elapsed_s"), mask_column(&b, "elapsed_s"));
}

#[test]
fn cli_overrides_change_paths_and_seed() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["run", "--config"])
        .arg(bundled_config("toy_smoke.json"))
        .args(["--paths", "1", "--seed", "99"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", stderr_of(&out));

    assert!(dir.path().join("path_000.csv").exists());
    assert!(!dir.path().join("path_001.csv").exists());
    let summary = ssca_bench::campaign::read_summary(dir.path()).expect("summary parses");
    assert_eq!(summary.paths, 1);
    assert_eq!(summary.master_seed, 99);
    assert_eq!(summary.records[0].seed, ssca::path_seed(99, 0));
}

#[test]
fn env_var_supplies_the_output_directory() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["run", "--config"])
        .arg(bundled_config("toy_smoke.json"))
        .args(["--paths", "1"])
        .env("SSCA_BENCH_OUT", dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn plot_reduces_a_campaign_to_quantile_curves() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = bin()
        .args(["run", "--config"])
        .arg(bundled_config("toy_smoke.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .expect("binary runs");
    assert!(run.status.success(), "{}", stderr_of(&run));

    let plot_path = dir.path().join("plot.csv");
    let plot = bin()
        .args(["plot", "--in"])
        .arg(dir.path())
        .arg("--out")
        .arg(&plot_path)
        .output()
        .expect("binary runs");
    assert!(plot.status.success(), "{}", stderr_of(&plot));

    let text = std::fs::read_to_string(&plot_path).expect("plot file");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().expect("header"),
        "t,median_rel_err,q1_rel_err,q3_rel_err,min_rel_err,max_rel_err"
    );
    assert_eq!(lines.count(), 80);
}

#[test]
fn plot_on_an_empty_directory_fails_cleanly() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["plot", "--in"])
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("plot.csv"))
        .output()
        .expect("binary runs");
    assert!(!out.status.success());
    assert!(stderr_of(&out).starts_with("error:"));
}
