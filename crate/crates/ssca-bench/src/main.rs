//! Command-line front end for the benchmark campaigns.

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssca_bench::{load_config, run_campaign_with, BenchError, CampaignSummary};

#[derive(Parser)]
#[command(
    name = "ssca-bench",
    version,
    about = "Seeded benchmark campaigns, trace files, and plot data for the ssca solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a JSON config file.
    Run {
        /// Experiment config file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the number of sample paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to $SSCA_BENCH_OUT, then ./bench-out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a campaign directory to a plot-ready quantile table.
    Plot {
        /// Directory a previous `run` wrote.
        #[arg(long = "in")]
        input: PathBuf,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a config file without running anything.
    Validate {
        /// Experiment config file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| std::env::var_os("SSCA_BENCH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bench-out"))
}

fn print_summary(summary: &CampaignSummary, dir: &std::path::Path) {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    println!("problem: {}", summary.problem.name());
    println!(
        "paths: {}  reached {:.0}% threshold: {}",
        summary.paths,
        summary.report_threshold * 100.0,
        summary.reached
    );
    println!("reference iterations per path: {}", summary.reference_iters);
    println!(
        "iterations to threshold: median {}  mean {}",
        opt(summary.median_iters),
        opt(summary.mean_iters)
    );
    println!(
        "fraction of paths with slack <= {:.0e}: {:.3}",
        summary.slack_tol, summary.fraction_slack_clean
    );
    println!("min rate margin: {}", opt(summary.min_rate_margin));
    println!("mean sum rate: {}", opt(summary.mean_sum_rate));
    println!(
        "measured outer iterations: {} ({:.3e} s each, wall-clock)",
        summary.measured_outer_iters, summary.seconds_per_outer_iter
    );
    println!("total wall-clock: {:.2} s", summary.total_elapsed_s);
    println!("wrote {}", dir.join("summary.json").display());
}

fn run() -> Result<(), BenchError> {
    match Cli::parse().command {
        Command::Run {
            config,
            paths,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(p) = paths {
                cfg.paths = p;
            }
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            cfg.validate()?;
            let dir = out_dir(out);
            let progress = std::io::stderr().is_terminal();
            let summary = run_campaign_with(&cfg, &dir, progress)?;
            print_summary(&summary, &dir);
            Ok(())
        }
        Command::Plot { input, out } => {
            ssca_bench::plotdata::emit_plot_data(&input, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let model = cfg.effective_model();
            println!(
                "config ok: problem={} paths={} reference_iters={} master_seed={} users={}",
                cfg.problem.name(),
                cfg.paths,
                cfg.reference_iters,
                cfg.run.seed,
                model.users()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
