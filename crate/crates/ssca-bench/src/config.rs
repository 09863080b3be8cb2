//! Experiment configuration: the JSON schema, defaults, and validation.
//!
//! A configuration names the problem to run, the network it runs on, the
//! solver settings, and the campaign protocol (path count, reference-run
//! length, report threshold). Unknown keys are rejected so a typo never
//! silently falls back to a default.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ssca::wireless::NetworkModel;
use ssca::RunConfig;

use crate::error::{BenchError, Result};

/// Which optimization problem a campaign runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Ergodic sum-rate maximization with coupled expected-rate floors,
    /// run on the serial driver.
    Coupled,
    /// The per-user decoupled variant with worst-case rate floors, run on
    /// the block-parallel driver.
    Decoupled,
    /// A one-dimensional stochastic quadratic, handy for smoke tests and
    /// protocol checks that should not cost minutes.
    Toy,
}

impl ProblemKind {
    /// Stable lowercase name, matching the JSON encoding.
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Coupled => "coupled",
            ProblemKind::Decoupled => "decoupled",
            ProblemKind::Toy => "toy",
        }
    }
}

/// One experiment: problem, model, solver settings, campaign protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Problem selector; the only required key.
    pub problem: ProblemKind,
    /// Interference network; `None` means the bundled five-user instance.
    /// Ignored by the toy problem.
    #[serde(default)]
    pub model: Option<NetworkModel>,
    /// Solver settings; `run.seed` is the campaign master seed.
    #[serde(default)]
    pub run: RunConfig,
    /// Number of independent sample paths.
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Length of the long reference run that defines each path's solution
    /// estimate; larger than `run.max_outer_iters` in normal use.
    #[serde(default = "default_reference_iters")]
    pub reference_iters: usize,
    /// Relative-error level the per-path iteration counts are measured at.
    #[serde(default = "default_report_threshold")]
    pub report_threshold: f64,
    /// Write full iterate columns `x_1..x_n` into per-path trace files.
    /// Plot emission needs them; campaigns that only want the summary can
    /// switch them off to shrink the files.
    #[serde(default = "default_true")]
    pub keep_iterates: bool,
}

fn default_paths() -> usize {
    50
}

fn default_reference_iters() -> usize {
    20_000
}

fn default_report_threshold() -> f64 {
    0.02
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// The network the campaign runs on: the configured one, or the
    /// bundled five-user instance when the file names none.
    pub fn effective_model(&self) -> NetworkModel {
        self.model.clone().unwrap_or_else(NetworkModel::five_user)
    }

    /// Checks every invariant; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(BenchError::InvalidConfig {
                field: "paths",
                message: "a campaign needs at least one sample path".into(),
            });
        }
        if self.reference_iters == 0 {
            return Err(BenchError::InvalidConfig {
                field: "reference_iters",
                message: "the reference run needs at least one iteration".into(),
            });
        }
        if !(self.report_threshold > 0.0) || !self.report_threshold.is_finite() {
            return Err(BenchError::InvalidConfig {
                field: "report_threshold",
                message: format!("must be positive and finite, got {}", self.report_threshold),
            });
        }
        self.run.validate()?;
        if self.problem != ProblemKind::Toy {
            self.effective_model().validate()?;
        }
        Ok(())
    }
}

/// Loads, parses, and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| BenchError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}
