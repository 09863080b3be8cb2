//! Problem construction for the three campaign targets.

use ssca::wireless::{coupled_problem, decoupled_problem, ChannelSample};
use ssca::{
    ChaCha8Rng, ConvexComponent, QuadraticComponent, FeasibleSet, RunConfig, RunOutcome,
    StochasticProblem,
};

use rand::Rng;

use crate::config::{ExperimentConfig, ProblemKind};
use crate::error::Result;

/// A campaign's problem instance. The two wireless problems share a sample
/// type; the toy draws plain scalars, so the variants carry their own
/// concrete `StochasticProblem`.
pub enum BuiltProblem {
    /// Coupled wireless problem, serial driver.
    Coupled(StochasticProblem<ChannelSample>),
    /// Decoupled wireless problem, block-parallel driver.
    Decoupled(StochasticProblem<ChannelSample>),
    /// Scalar stochastic quadratic, serial driver.
    Toy(StochasticProblem<f64>),
}

impl BuiltProblem {
    /// Decision-vector dimension.
    pub fn dimension(&self) -> usize {
        match self {
            BuiltProblem::Coupled(p) | BuiltProblem::Decoupled(p) => p.dimension(),
            BuiltProblem::Toy(p) => p.dimension(),
        }
    }

    /// Runs one full-length trajectory with stopping disabled, so the
    /// recorded rows cover every iteration up to `length`. A measured run
    /// with any stopping rule is an exact prefix of this trajectory — the
    /// stopping test reads the recorded residual and never influences the
    /// iterates — which is what lets one run serve as both the reference
    /// and the measured trace.
    pub fn run_full(&self, run: &RunConfig, length: usize, seed: u64) -> Result<RunOutcome> {
        let mut cfg = run.clone();
        cfg.seed = seed;
        cfg.max_outer_iters = length;
        cfg.stop_residual = f64::MIN_POSITIVE;
        let outcome = match self {
            BuiltProblem::Coupled(p) => ssca::run_ssca(p, &cfg)?,
            BuiltProblem::Decoupled(p) => ssca::run_parallel_ssca(p, &cfg)?,
            BuiltProblem::Toy(p) => ssca::run_ssca(p, &cfg)?,
        };
        Ok(outcome)
    }
}

/// The toy target: minimize `E[(x - xi)^2]` with `xi ~ U(1, 3)` over
/// `[0, 10]`, so the solution is 2 and every protocol step stays cheap.
pub fn toy_problem() -> StochasticProblem<f64> {
    let set = FeasibleSet::bounded_box(vec![0.0], vec![10.0]).expect("static box");
    StochasticProblem::builder(set, |rng: &mut ChaCha8Rng| 1.0 + 2.0 * rng.random::<f64>())
        .objective(
            |x, xi| (x[0] - xi) * (x[0] - xi),
            |x, xi| vec![2.0 * (x[0] - xi)],
            |_, xi| ConvexComponent::new(1, QuadraticComponent::centered(vec![1.0], vec![*xi])),
        )
        .build()
        .expect("static toy problem")
}

/// Builds the configured problem instance.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    Ok(match cfg.problem {
        ProblemKind::Coupled => BuiltProblem::Coupled(coupled_problem(&cfg.effective_model())?),
        ProblemKind::Decoupled => {
            BuiltProblem::Decoupled(decoupled_problem(&cfg.effective_model())?)
        }
        ProblemKind::Toy => BuiltProblem::Toy(toy_problem()),
    })
}
