//! Outer loops of the solver: the serial driver, the block-parallel
//! driver, and the multi-restart wrapper.
//!
//! Every outer iteration `t = 1, 2, ...` performs the same four moves:
//!
//! 1. draw fresh samples from a generator seeded independently per
//!    iteration (so block parallelism cannot perturb the stream),
//! 2. fold each sample's convex approximations into the running surrogates
//!    with forgetting factor `omega_t`,
//! 3. solve the penalized convex subproblem(s) warm-started at the current
//!    iterate, and
//! 4. move by the averaging step `x^t = (1 - gamma_t) x^{t-1} +
//!    gamma_t x_bar^t`, then re-project so feasibility is exact.
//!
//! The run stops once `max(step_gap, |slack_sum - window_mean|)` falls to
//! `stop_residual` — the iterate has stopped moving and the slacks have
//! stabilized (not necessarily at zero: an infeasible problem converges to
//! a positive-slack stationary point of the penalized problem, and the
//! outcome distinguishes the two cases via `stationary_for_original`).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{l1_norm, linf_distance, Estimate};
use crate::error::{Error, Result};
use crate::problem::{DecisionVector, PenaltyConfig, StochasticProblem};
use crate::rng::{estimate_rng, iteration_rng, restart_seed};
use crate::schedule::StepsizeSchedule;
use crate::set::FeasibleSet;
use crate::subproblem::{
    solve_block_subproblem, solve_subproblem, InnerSolverConfig, SubproblemSolution,
};
use crate::surrogate::{SurrogateState, DEFAULT_MAX_COMPONENTS, DEFAULT_PRUNE_THRESHOLD};
use crate::trace::{IterateTrace, NullSink, TraceRow, TraceSink};

/// Length of the moving window used by the stopping rule.
const SLACK_WINDOW: usize = 50;

/// Full configuration of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Hard cap on outer iterations.
    #[serde(default = "default_max_outer")]
    pub max_outer_iters: usize,
    /// Stopping threshold for `max(step_gap, slack deviation)`.
    #[serde(default = "default_stop_residual")]
    pub stop_residual: f64,
    /// Iterate-averaging stepsize `gamma_t`; must decay strictly faster
    /// than `omega` so that `gamma_t / omega_t -> 0`.
    #[serde(default = "StepsizeSchedule::default_averaging")]
    pub gamma: StepsizeSchedule,
    /// Surrogate forgetting factor `omega_t`.
    #[serde(default = "StepsizeSchedule::default_forgetting")]
    pub omega: StepsizeSchedule,
    /// Constraint penalty.
    #[serde(default)]
    pub penalty: PenaltyConfig,
    /// Inner solver tuning.
    #[serde(default)]
    pub inner: InnerSolverConfig,
    /// Master seed; every iteration, restart, and estimate derives its own
    /// stream from it.
    #[serde(default)]
    pub seed: u64,
    /// Attempts for [`multi_restart`]; plain runs ignore it.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// `|s*|_1` at or below this counts as "feasible in the limit".
    #[serde(default = "default_slack_zero_tol")]
    pub slack_zero_tol: f64,
    /// Samples drawn per iteration; the surrogate update uses their mean.
    #[serde(default = "default_minibatch")]
    pub minibatch: usize,
    /// Solve the per-block subproblems on the thread pool. Results are
    /// merged by block index, so this never changes the numbers.
    #[serde(default)]
    pub parallel_blocks: bool,
    /// Surrogate components below this weight are dropped.
    #[serde(default = "default_prune_threshold")]
    pub prune_threshold: f64,
    /// Hard cap on live surrogate components (lightest evicted first).
    #[serde(default = "default_max_components")]
    pub max_components: usize,
}

fn default_max_outer() -> usize {
    2000
}

fn default_stop_residual() -> f64 {
    1e-4
}

fn default_restarts() -> usize {
    1
}

fn default_slack_zero_tol() -> f64 {
    1e-6
}

fn default_minibatch() -> usize {
    1
}

fn default_prune_threshold() -> f64 {
    DEFAULT_PRUNE_THRESHOLD
}

fn default_max_components() -> usize {
    DEFAULT_MAX_COMPONENTS
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_outer_iters: default_max_outer(),
            stop_residual: default_stop_residual(),
            gamma: StepsizeSchedule::default_averaging(),
            omega: StepsizeSchedule::default_forgetting(),
            penalty: PenaltyConfig::default(),
            inner: InnerSolverConfig::default(),
            seed: 0,
            restarts: default_restarts(),
            slack_zero_tol: default_slack_zero_tol(),
            minibatch: default_minibatch(),
            parallel_blocks: false,
            prune_threshold: default_prune_threshold(),
            max_components: default_max_components(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidRunConfig(
                "max_outer_iters must be at least 1".into(),
            ));
        }
        if !(self.stop_residual > 0.0) || !self.stop_residual.is_finite() {
            return Err(Error::InvalidRunConfig(format!(
                "stop_residual must be positive, got {}",
                self.stop_residual
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidRunConfig("restarts must be at least 1".into()));
        }
        if !self.slack_zero_tol.is_finite() || self.slack_zero_tol < 0.0 {
            return Err(Error::InvalidRunConfig(format!(
                "slack_zero_tol must be nonnegative, got {}",
                self.slack_zero_tol
            )));
        }
        if self.minibatch == 0 {
            return Err(Error::InvalidRunConfig("minibatch must be at least 1".into()));
        }
        if !self.prune_threshold.is_finite() || self.prune_threshold < 0.0 {
            return Err(Error::InvalidRunConfig(format!(
                "prune_threshold must be nonnegative, got {}",
                self.prune_threshold
            )));
        }
        if self.max_components == 0 {
            return Err(Error::InvalidRunConfig(
                "max_components must be at least 1".into(),
            ));
        }
        self.gamma.validate()?;
        self.omega.validate()?;
        // The averaging step must vanish relative to the forgetting factor
        // (gamma_t / omega_t -> 0); with power laws that is exactly an
        // exponent gap.
        if self.gamma.exponent <= self.omega.exponent {
            return Err(Error::InvalidSchedule(format!(
                "gamma must decay faster than omega: exponents {} vs {}",
                self.gamma.exponent, self.omega.exponent
            )));
        }
        self.penalty.validate()?;
        self.inner.validate()?;
        Ok(())
    }
}

/// Outcome of a run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Final iterate (feasible w.r.t. the set exactly).
    pub x_star: DecisionVector,
    /// Slacks of the final subproblem solution.
    pub s_star: Vec<f64>,
    /// True when the stopping rule fired before the iteration cap.
    pub converged: bool,
    /// True when converged with `|s*|_1 <= slack_zero_tol`: the limit is
    /// then stationary for the original constrained problem, not merely
    /// for its penalized relaxation.
    pub stationary_for_original: bool,
    /// Per-iteration diagnostics.
    pub trace: IterateTrace,
}

/// Iterate averaging: `(1 - gamma_t) x_prev + gamma_t x_bar`.
pub fn average_iterate(x_prev: &[f64], x_bar: &[f64], gamma_t: f64) -> Result<DecisionVector> {
    if !(gamma_t > 0.0 && gamma_t <= 1.0) {
        return Err(Error::WeightOutOfRange(gamma_t));
    }
    if x_prev.len() != x_bar.len() {
        return Err(Error::DimensionMismatch {
            expected: x_prev.len(),
            got: x_bar.len(),
        });
    }
    Ok(x_prev
        .iter()
        .zip(x_bar.iter())
        .map(|(&p, &b)| (1.0 - gamma_t) * p + gamma_t * b)
        .collect())
}

/// Monte Carlo estimate of the expected objective at `x` (mean and
/// standard error over `n_samples` fresh draws).
pub fn objective_estimate<S>(
    problem: &StochasticProblem<S>,
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    problem.objective_estimate(x, n_samples, seed)
}

/// Rolling slack statistics for the stopping rule.
struct SlackWindow {
    values: Vec<f64>,
    next: usize,
}

impl SlackWindow {
    fn new() -> Self {
        SlackWindow {
            values: Vec::with_capacity(SLACK_WINDOW),
            next: 0,
        }
    }

    /// Inserts a value and returns its deviation from the window mean.
    fn deviation_after(&mut self, value: f64) -> f64 {
        if self.values.len() < SLACK_WINDOW {
            self.values.push(value);
        } else {
            self.values[self.next] = value;
            self.next = (self.next + 1) % SLACK_WINDOW;
        }
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        (value - mean).abs()
    }
}

/// Shared per-iteration bookkeeping: averaging, stopping, and tracing.
struct OuterLoop<'a> {
    cfg: &'a RunConfig,
    set: &'a FeasibleSet,
    window: SlackWindow,
    trace: IterateTrace,
    started: Instant,
}

impl<'a> OuterLoop<'a> {
    fn new(cfg: &'a RunConfig, set: &'a FeasibleSet) -> Self {
        OuterLoop {
            cfg,
            set,
            window: SlackWindow::new(),
            trace: IterateTrace::new(),
            started: Instant::now(),
        }
    }

    /// Applies the averaging step and stopping rule, records the trace
    /// row, and returns the new iterate plus the stop decision.
    /// `objective_at` is called once with the new iterate.
    fn advance(
        &mut self,
        t: usize,
        x_prev: &[f64],
        x_bar: &[f64],
        slack_sum: f64,
        objective_at: impl FnOnce(&[f64]) -> f64,
        sink: &mut dyn TraceSink,
    ) -> Result<(DecisionVector, bool)> {
        let gamma_t = self.cfg.gamma.value(t)?;
        let step_gap = linf_distance(x_bar, x_prev);
        let mut x = average_iterate(x_prev, x_bar, gamma_t)?;
        // The combination is feasible already by convexity; the projection
        // only clears floating-point drift at the box faces.
        self.set.project_in_place(&mut x)?;
        let residual = step_gap.max(self.window.deviation_after(slack_sum));
        let row = TraceRow {
            t,
            objective_estimate: objective_at(&x),
            x: x.clone(),
            slack_sum,
            step_gap,
            residual,
            elapsed_s: self.started.elapsed().as_secs_f64(),
        };
        sink.record(&row)?;
        self.trace.push(row)?;
        Ok((x, residual <= self.cfg.stop_residual))
    }
}

/// Wraps an error with the outer iteration it occurred in.
fn at_iteration(t: usize) -> impl Fn(Error) -> Error + Copy {
    move |e| Error::AtIteration {
        iteration: t,
        source: Box::new(e),
    }
}

/// Runs the serial driver from the problem's own starting point.
pub fn run_ssca<S>(problem: &StochasticProblem<S>, cfg: &RunConfig) -> Result<RunOutcome> {
    run_ssca_with_sink(problem, cfg, &mut NullSink)
}

/// Serial driver that also streams every trace row into `sink`.
pub fn run_ssca_with_sink<S>(
    problem: &StochasticProblem<S>,
    cfg: &RunConfig,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome> {
    cfg.validate()?;
    run_serial_from(problem, cfg, problem.initial_point()?, sink)
}

/// Runs the block-parallel driver from the problem's own starting point.
pub fn run_parallel_ssca<S>(problem: &StochasticProblem<S>, cfg: &RunConfig) -> Result<RunOutcome>
where
    S: Send + Sync,
{
    run_parallel_ssca_with_sink(problem, cfg, &mut NullSink)
}

/// Block-parallel driver that also streams every trace row into `sink`.
pub fn run_parallel_ssca_with_sink<S>(
    problem: &StochasticProblem<S>,
    cfg: &RunConfig,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome>
where
    S: Send + Sync,
{
    cfg.validate()?;
    run_blocks_from(problem, cfg, problem.initial_point()?, sink)
}

/// Serial loop body. The problem must either be coupled or consist of a
/// single block (whose families then serve as the coupled ones).
fn run_serial_from<S>(
    problem: &StochasticProblem<S>,
    cfg: &RunConfig,
    x0: DecisionVector,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome> {
    let n = problem.dimension();
    let single_block = match problem.blocks() {
        None => false,
        Some(b) if b.block_count() == 1 => true,
        Some(b) => {
            return Err(Error::InvalidBlocks(format!(
                "the serial driver cannot honor a {}-block constraint split; \
                 use the block-parallel driver",
                b.block_count()
            )))
        }
    };
    let m = if single_block {
        problem.blocks().expect("checked above").constraint_count(0)
    } else {
        problem.coupled_constraint_count()
    };
    let set = problem.feasible_set();

    let mut x = set.project(&x0)?;
    let fresh = || SurrogateState::empty(n).with_policy(cfg.prune_threshold, cfg.max_components);
    let mut obj_state = fresh()?;
    let mut cons_states = Vec::with_capacity(m);
    for _ in 0..m {
        cons_states.push(fresh()?);
    }

    let mut outer = OuterLoop::new(cfg, set);
    let mut converged = false;
    let mut s_star: Vec<f64> = Vec::new();

    for t in 1..=cfg.max_outer_iters {
        let at = at_iteration(t);
        let omega_t = cfg.omega.value(t)?;
        let mut rng = iteration_rng(cfg.seed, t);
        let samples: Vec<S> = (0..cfg.minibatch).map(|_| problem.sample(&mut rng)).collect();

        let obj_family = if single_block {
            problem.block_objective_family(0)?
        } else {
            problem.objective_family()
        };
        let batch: Vec<_> = samples.iter().map(|s| obj_family.build(&x, s)).collect();
        obj_state = obj_state.update_batch(&x, t as u64, omega_t, batch).map_err(at)?;
        for (i, state) in cons_states.iter_mut().enumerate() {
            let family = if single_block {
                problem.block_constraint_family(0, i)?
            } else {
                problem.constraint_family(i)
            };
            let batch: Vec<_> = samples.iter().map(|s| family.build(&x, s)).collect();
            let taken = std::mem::replace(state, SurrogateState::empty(0));
            *state = taken.update_batch(&x, t as u64, omega_t, batch).map_err(at)?;
        }

        let solution =
            solve_subproblem(&obj_state, &cons_states, cfg.penalty.rho, set, &x, &cfg.inner)
                .map_err(at)?;
        let (x_next, stop) = outer.advance(
            t,
            &x,
            &solution.x_bar,
            l1_norm(&solution.s),
            |xn| obj_state.value(xn),
            sink,
        )?;
        x = x_next;
        s_star = solution.s;
        if stop {
            converged = true;
            break;
        }
    }

    let stationary_for_original = converged && l1_norm(&s_star) <= cfg.slack_zero_tol;
    Ok(RunOutcome {
        x_star: x,
        s_star,
        converged,
        stationary_for_original,
        trace: outer.trace,
    })
}

/// Block-parallel loop body: all block subproblems per iteration are
/// solved against the same snapshot of `(x, surrogates)` and merged by
/// block index, so concurrent execution cannot change the numbers.
fn run_blocks_from<S>(
    problem: &StochasticProblem<S>,
    cfg: &RunConfig,
    x0: DecisionVector,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome>
where
    S: Send + Sync,
{
    let n = problem.dimension();
    let blocks = problem.blocks().ok_or(Error::MissingBlocks)?.clone();
    let kk = blocks.block_count();
    let set = problem.feasible_set();

    let mut x = set.project(&x0)?;
    let fresh = |dim: usize| {
        SurrogateState::empty(dim).with_policy(cfg.prune_threshold, cfg.max_components)
    };
    let mut obj_states = Vec::with_capacity(kk);
    let mut cons_states: Vec<Vec<SurrogateState>> = Vec::with_capacity(kk);
    for k in 0..kk {
        let dim_k = blocks.range(k).len();
        obj_states.push(fresh(dim_k)?);
        cons_states.push(
            (0..blocks.constraint_count(k))
                .map(|_| fresh(dim_k))
                .collect::<Result<Vec<_>>>()?,
        );
    }

    let mut outer = OuterLoop::new(cfg, set);
    let mut converged = false;
    let mut s_star: Vec<f64> = Vec::new();

    for t in 1..=cfg.max_outer_iters {
        let at = at_iteration(t);
        let omega_t = cfg.omega.value(t)?;
        let mut rng = iteration_rng(cfg.seed, t);
        let samples: Vec<S> = (0..cfg.minibatch).map(|_| problem.sample(&mut rng)).collect();

        for k in 0..kk {
            let family = problem.block_objective_family(k)?;
            let batch: Vec<_> = samples.iter().map(|s| family.build(&x, s)).collect();
            let taken = std::mem::replace(&mut obj_states[k], SurrogateState::empty(0));
            obj_states[k] = taken.update_batch(&x, t as u64, omega_t, batch).map_err(at)?;
            for i in 0..blocks.constraint_count(k) {
                let family = problem.block_constraint_family(k, i)?;
                let batch: Vec<_> = samples.iter().map(|s| family.build(&x, s)).collect();
                let taken = std::mem::replace(&mut cons_states[k][i], SurrogateState::empty(0));
                cons_states[k][i] =
                    taken.update_batch(&x, t as u64, omega_t, batch).map_err(at)?;
            }
        }

        let solve_one = |k: usize| -> Result<SubproblemSolution> {
            solve_block_subproblem(
                k,
                &obj_states[k],
                &cons_states[k],
                cfg.penalty.rho,
                problem.block_set(k)?,
                &x[blocks.range(k)],
                &cfg.inner,
            )
        };
        let solutions: Vec<SubproblemSolution> = if cfg.parallel_blocks {
            (0..kk)
                .into_par_iter()
                .map(solve_one)
                .collect::<Result<Vec<_>>>()
                .map_err(at)?
        } else {
            (0..kk).map(solve_one).collect::<Result<Vec<_>>>().map_err(at)?
        };

        let mut x_bar = vec![0.0; n];
        let mut slacks = Vec::with_capacity(blocks.total_constraints());
        for (k, sol) in solutions.iter().enumerate() {
            x_bar[blocks.range(k)].copy_from_slice(&sol.x_bar);
            slacks.extend_from_slice(&sol.s);
        }
        let (x_next, stop) = outer.advance(
            t,
            &x,
            &x_bar,
            l1_norm(&slacks),
            // Each block surrogate approximates the full objective as a
            // function of its own coordinates; their mean is the scalar
            // summary.
            |xn| {
                (0..kk)
                    .map(|k| obj_states[k].value(&xn[blocks.range(k)]))
                    .sum::<f64>()
                    / kk as f64
            },
            sink,
        )?;
        x = x_next;
        s_star = slacks;
        if stop {
            converged = true;
            break;
        }
    }

    let stationary_for_original = converged && l1_norm(&s_star) <= cfg.slack_zero_tol;
    Ok(RunOutcome {
        x_star: x,
        s_star,
        converged,
        stationary_for_original,
        trace: outer.trace,
    })
}

/// Repeats the run with fresh random starting points (and a growing
/// penalty) until one attempt converges with zero slack, returning the
/// best outcome by `(slack L1, final objective estimate)` lexicographic
/// order.
///
/// Attempt 1 starts from the problem's configured point; later attempts
/// draw uniform starting points from the feasible set and use their own
/// derived seeds. After every failed attempt the penalty is multiplied by
/// `penalty.rho_growth`. Problems with two or more blocks run on the
/// block-parallel driver, everything else on the serial one.
pub fn multi_restart<S>(problem: &StochasticProblem<S>, cfg: &RunConfig) -> Result<RunOutcome>
where
    S: Send + Sync,
{
    cfg.validate()?;
    let parallel = matches!(problem.blocks(), Some(b) if b.block_count() > 1);
    let mut best: Option<RunOutcome> = None;
    let mut attempt_cfg = cfg.clone();
    for attempt in 0..cfg.restarts {
        let (x0, seed) = if attempt == 0 {
            (problem.initial_point()?, cfg.seed)
        } else {
            let seed = restart_seed(cfg.seed, attempt);
            let x0 = problem.feasible_set().sample_uniform(&mut estimate_rng(seed))?;
            (x0, seed)
        };
        attempt_cfg.seed = seed;
        let outcome = if parallel {
            run_blocks_from(problem, &attempt_cfg, x0, &mut NullSink)?
        } else {
            run_serial_from(problem, &attempt_cfg, x0, &mut NullSink)?
        };
        let done = outcome.stationary_for_original;
        let better = match &best {
            None => true,
            Some(b) => {
                let (sa, sb) = (l1_norm(&outcome.s_star), l1_norm(&b.s_star));
                let obj = |o: &RunOutcome| {
                    o.trace
                        .last()
                        .map(|r| r.objective_estimate)
                        .unwrap_or(f64::INFINITY)
                };
                sa < sb || (sa == sb && obj(&outcome) < obj(b))
            }
        };
        if better {
            best = Some(outcome);
        }
        if done {
            break;
        }
        attempt_cfg.penalty.rho *= cfg.penalty.rho_growth;
    }
    best.ok_or_else(|| Error::InvalidRunConfig("no restart attempts executed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn averaging_must_decay_faster_than_forgetting() {
        let mut cfg = RunConfig::default();
        cfg.gamma = StepsizeSchedule::power_law(0.6, 1.0, 0).unwrap();
        cfg.omega = StepsizeSchedule::power_law(0.9, 1.0, 0).unwrap();
        assert!(matches!(
            cfg.validate().unwrap_err(),
            Error::InvalidSchedule(_)
        ));
        // Equal exponents are rejected too: the ratio would not vanish.
        cfg.gamma = StepsizeSchedule::power_law(0.8, 1.0, 0).unwrap();
        cfg.omega = StepsizeSchedule::power_law(0.8, 1.0, 0).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_rejects_degenerate_values() {
        for patch in [
            |c: &mut RunConfig| c.max_outer_iters = 0,
            |c: &mut RunConfig| c.stop_residual = 0.0,
            |c: &mut RunConfig| c.stop_residual = f64::NAN,
            |c: &mut RunConfig| c.restarts = 0,
            |c: &mut RunConfig| c.slack_zero_tol = -1.0,
            |c: &mut RunConfig| c.minibatch = 0,
            |c: &mut RunConfig| c.prune_threshold = f64::INFINITY,
            |c: &mut RunConfig| c.max_components = 0,
            |c: &mut RunConfig| c.penalty.rho = 0.0,
            |c: &mut RunConfig| c.inner.max_iters = 0,
        ] {
            let mut cfg = RunConfig::default();
            patch(&mut cfg);
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn average_iterate_is_the_convex_combination() {
        let x = average_iterate(&[0.0, 2.0], &[1.0, 0.0], 0.25).unwrap();
        assert_eq!(x, vec![0.25, 1.5]);
        // gamma = 1 replaces the iterate entirely.
        let x = average_iterate(&[5.0], &[-1.0], 1.0).unwrap();
        assert_eq!(x, vec![-1.0]);
        assert!(matches!(
            average_iterate(&[0.0], &[1.0], 0.0).unwrap_err(),
            Error::WeightOutOfRange(_)
        ));
        assert!(matches!(
            average_iterate(&[0.0], &[1.0, 2.0], 0.5).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn slack_window_deviation_is_zero_for_constant_input() {
        let mut w = SlackWindow::new();
        for _ in 0..200 {
            assert_eq!(w.deviation_after(3.5), 0.0);
        }
    }

    #[test]
    fn slack_window_tracks_the_moving_mean() {
        let mut w = SlackWindow::new();
        // Fill the window with zeros, then feed a spike: the deviation is
        // the spike minus the new window mean (49 zeros + the spike).
        for _ in 0..SLACK_WINDOW {
            w.deviation_after(0.0);
        }
        let dev = w.deviation_after(1.0);
        let expected = 1.0 - 1.0 / SLACK_WINDOW as f64;
        assert!((dev - expected).abs() < 1e-15);
    }
}
