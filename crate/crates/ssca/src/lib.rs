//! Stochastic successive convex approximation (SSCA) for expectation-valued
//! nonconvex programs.
//!
//! The solver targets problems of the form
//!
//! ```text
//! minimize   f_0(x) = E[ g_0(x, xi) ]
//! subject to f_i(x) = E[ g_i(x, xi) ] <= 0,   i = 1..m,    x in X,
//! ```
//!
//! where neither the expectations nor their gradients are available in
//! closed form — only per-sample evaluations. Each iteration draws a fresh
//! sample, folds a convex per-sample approximation of every function into a
//! running weighted average (the *surrogate*), solves the resulting convex
//! subproblem over `X` with slack-penalized constraints, and moves the
//! iterate by a diminishing convex combination toward the subproblem
//! solution. Under the usual diminishing, non-summable, square-summable
//! stepsize conditions the iterates converge to stationary points of the
//! penalized problem almost surely.
//!
//! Two drivers are provided:
//!
//! * [`run_ssca`] — the coupled variant: one subproblem in the full
//!   decision vector per iteration.
//! * [`run_parallel_ssca`] — the separable variant: the vector is split
//!   into blocks, each with its own surrogates and (optionally) its own
//!   constraints, and all block subproblems are solved independently per
//!   iteration.
//!
//! The [`wireless`] module instantiates both variants for ergodic-rate
//! power control over fading interference channels.

pub mod component;
pub mod diagnostics;
pub mod driver;
mod error;
pub mod problem;
mod rng;
pub mod schedule;
pub mod set;
pub mod subproblem;
pub mod surrogate;
pub mod trace;
pub mod wireless;

/// The deterministic generator threaded through samplers; re-exported so
/// problem definitions can name it without depending on `rand_chacha`.
pub use rand_chacha::ChaCha8Rng;

pub use component::{
    ConstantComponent, ConvexComponent, FnComponent, QuadraticComponent, SurrogateComponent,
};
pub use diagnostics::Estimate;
pub use driver::{
    average_iterate, multi_restart, run_parallel_ssca, run_parallel_ssca_with_sink, run_ssca,
    run_ssca_with_sink, RunConfig, RunOutcome,
};
pub use error::{Error, Result};
pub use problem::{
    penalize, BlockStructure, DecisionVector, PenaltyConfig, PenalizedProblem, ProblemBuilder,
    SampledFn, StochasticProblem, SurrogateFamily,
};
pub use rng::{estimate_rng, iteration_rng, iteration_seed, path_seed, restart_seed, splitmix64};
pub use schedule::StepsizeSchedule;
pub use set::FeasibleSet;
pub use subproblem::{InnerSolverConfig, StepRule, SubproblemSolution};
pub use surrogate::SurrogateState;
pub use trace::{IterateTrace, NullSink, TraceRow, TraceSink};
