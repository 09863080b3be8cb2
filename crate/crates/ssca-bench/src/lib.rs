//! Benchmark harness for the `ssca` solver: seeded multi-path campaigns
//! over the bundled problems, per-path trace files, campaign summaries,
//! and plot-ready convergence tables.
//!
//! The library side exposes the campaign engine so tests and other tools
//! can drive it directly; the `ssca-bench` binary wraps it in a small CLI
//! (`run`, `plot`, `validate`).

pub mod campaign;
pub mod config;
pub mod csvio;
pub mod error;
pub mod plotdata;
pub mod problem;
pub mod stats;

pub use campaign::{run_campaign, run_campaign_with, CampaignSummary, PathRecord};
pub use config::{load_config, ExperimentConfig, ProblemKind};
pub use error::{BenchError, Result};
