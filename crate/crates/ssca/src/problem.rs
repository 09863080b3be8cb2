//! Problem definitions: sampled objective/constraint families, their convex
//! surrogate builders, block structure, and the exact-penalty view.
//!
//! A [`StochasticProblem`] describes
//!
//! ```text
//! minimize   f_0(x) = E[ g_0(x, xi) ]
//! subject to f_i(x) = E[ g_i(x, xi) ] <= 0,   i = 1..m,    x in X,
//! ```
//!
//! through three ingredients per function: a per-sample evaluator, its
//! gradient, and a builder producing the convex approximation of
//! `g_i(., xi)` around an anchor point. The solver never sees the
//! expectation functions directly — only samples and surrogates.

use std::ops::Range;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::component::ConvexComponent;
use crate::diagnostics::Estimate;
use crate::error::{Error, Result};
use crate::rng::estimate_rng;
use crate::set::FeasibleSet;

/// Decision vectors are plain `f64` vectors throughout.
pub type DecisionVector = Vec<f64>;

type ValueFn<S> = Arc<dyn Fn(&[f64], &S) -> f64 + Send + Sync>;
type GradFn<S> = Arc<dyn Fn(&[f64], &S) -> Vec<f64> + Send + Sync>;
type BuildFn<S> = Arc<dyn Fn(&[f64], &S) -> ConvexComponent + Send + Sync>;
type SampleFn<S> = Arc<dyn Fn(&mut ChaCha8Rng) -> S + Send + Sync>;

/// A per-sample scalar function `g(x, xi)` with an analytic gradient in `x`.
#[derive(Clone)]
pub struct SampledFn<S> {
    dim: usize,
    value: ValueFn<S>,
    gradient: GradFn<S>,
}

impl<S> SampledFn<S> {
    /// Wraps value and gradient closures over a `dim`-dimensional argument.
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &S) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SampledFn {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64], sample: &S) -> f64 {
        (self.value)(x, sample)
    }

    pub fn gradient(&self, x: &[f64], sample: &S) -> Vec<f64> {
        (self.gradient)(x, sample)
    }
}

/// Builds the convex per-sample approximation `g_hat(., anchor, xi)`.
///
/// The anchor is always the full decision vector; the produced component's
/// argument has `domain_dim` coordinates (the full vector for coupled
/// families, one block for block families).
#[derive(Clone)]
pub struct SurrogateFamily<S> {
    domain_dim: usize,
    build: BuildFn<S>,
}

impl<S> SurrogateFamily<S> {
    pub fn new(
        domain_dim: usize,
        build: impl Fn(&[f64], &S) -> ConvexComponent + Send + Sync + 'static,
    ) -> Self {
        SurrogateFamily {
            domain_dim,
            build: Arc::new(build),
        }
    }

    pub fn domain_dimension(&self) -> usize {
        self.domain_dim
    }

    pub fn build(&self, anchor: &[f64], sample: &S) -> ConvexComponent {
        (self.build)(anchor, sample)
    }
}

/// Contiguous, ordered partition of `0..n` into `K` blocks, with the number
/// of constraints assigned to each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStructure {
    ranges: Vec<Range<usize>>,
    constraint_counts: Vec<usize>,
}

impl BlockStructure {
    /// Validates that `ranges` are nonempty, in order, contiguous, and cover
    /// `0..dimension` exactly.
    pub fn new(ranges: Vec<Range<usize>>, dimension: usize) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidBlocks("no blocks given".into()));
        }
        let mut cursor = 0usize;
        for (k, r) in ranges.iter().enumerate() {
            if r.start != cursor || r.end <= r.start {
                return Err(Error::InvalidBlocks(format!(
                    "block {k} is {r:?}, expected a nonempty range starting at {cursor}"
                )));
            }
            cursor = r.end;
        }
        if cursor != dimension {
            return Err(Error::InvalidBlocks(format!(
                "blocks cover 0..{cursor}, expected 0..{dimension}"
            )));
        }
        let constraint_counts = vec![0; ranges.len()];
        Ok(BlockStructure {
            ranges,
            constraint_counts,
        })
    }

    /// One scalar block per coordinate.
    pub fn singletons(dimension: usize) -> Result<Self> {
        BlockStructure::new((0..dimension).map(|i| i..i + 1).collect(), dimension)
    }

    /// Number of blocks `K`.
    pub fn block_count(&self) -> usize {
        self.ranges.len()
    }

    /// Coordinate range of block `k`.
    pub fn range(&self, k: usize) -> Range<usize> {
        self.ranges[k].clone()
    }

    /// All block ranges in order.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Constraints assigned to block `k`.
    pub fn constraint_count(&self, k: usize) -> usize {
        self.constraint_counts[k]
    }

    /// Per-block constraint counts.
    pub fn constraint_counts(&self) -> &[usize] {
        &self.constraint_counts
    }

    /// Total number of constraints across blocks.
    pub fn total_constraints(&self) -> usize {
        self.constraint_counts.iter().sum()
    }

    /// Splits `x` into per-block slices; concatenating the result in order
    /// reproduces `x`.
    pub fn split<'a>(&self, x: &'a [f64]) -> Result<Vec<&'a [f64]>> {
        let n = self.ranges.last().map(|r| r.end).unwrap_or(0);
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        Ok(self.ranges.iter().map(|r| &x[r.clone()]).collect())
    }
}

/// One expectation constraint: per-sample evaluator plus surrogate builder.
struct Constraint<S> {
    g: SampledFn<S>,
    family: SurrogateFamily<S>,
}

/// Per-block families for the separable formulation.
struct BlockFamilies<S> {
    structure: BlockStructure,
    /// Convexified objective restricted to each block (full-vector anchor).
    objective: Vec<SurrogateFamily<S>>,
    /// Per-block constraints; the sampled functions take block coordinates.
    constraints: Vec<Vec<Constraint<S>>>,
    /// Feasible set of each block (sub-box of the master set).
    sets: Vec<FeasibleSet>,
}

/// A stochastic optimization problem in the form solved by this crate.
pub struct StochasticProblem<S> {
    dimension: usize,
    feasible: FeasibleSet,
    sampler: SampleFn<S>,
    objective: SampledFn<S>,
    objective_family: SurrogateFamily<S>,
    constraints: Vec<Constraint<S>>,
    blocks: Option<BlockFamilies<S>>,
    initial_point: Option<DecisionVector>,
}

impl<S> StochasticProblem<S> {
    /// Starts a builder over `feasible` with the given sample generator.
    pub fn builder(
        feasible: FeasibleSet,
        sampler: impl Fn(&mut ChaCha8Rng) -> S + Send + Sync + 'static,
    ) -> ProblemBuilder<S> {
        ProblemBuilder {
            dimension: feasible.dimension(),
            feasible,
            sampler: Arc::new(sampler),
            objective: None,
            constraints: Vec::new(),
            block_ranges: None,
            block_objective: Vec::new(),
            block_constraints: Vec::new(),
            initial_point: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible
    }

    /// Number of expectation constraints: the coupled count, or the total
    /// across blocks for a separable problem.
    pub fn constraint_count(&self) -> usize {
        match &self.blocks {
            Some(b) => b.structure.total_constraints(),
            None => self.constraints.len(),
        }
    }

    /// Draws one sample of the random state.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> S {
        (self.sampler)(rng)
    }

    /// Per-sample objective value `g_0(x, xi)`.
    pub fn objective_value(&self, x: &[f64], sample: &S) -> f64 {
        self.objective.value(x, sample)
    }

    /// Per-sample objective gradient.
    pub fn objective_gradient(&self, x: &[f64], sample: &S) -> Vec<f64> {
        self.objective.gradient(x, sample)
    }

    /// Per-sample value of coupled constraint `i` (0-based).
    pub fn constraint_value(&self, i: usize, x: &[f64], sample: &S) -> f64 {
        self.constraints[i].g.value(x, sample)
    }

    /// The objective's per-sample function.
    pub fn objective_fn(&self) -> &SampledFn<S> {
        &self.objective
    }

    /// The coupled constraints' per-sample functions.
    pub fn constraint_fn(&self, i: usize) -> &SampledFn<S> {
        &self.constraints[i].g
    }

    /// Surrogate builder for the objective.
    pub fn objective_family(&self) -> &SurrogateFamily<S> {
        &self.objective_family
    }

    /// Surrogate builder for coupled constraint `i`.
    pub fn constraint_family(&self, i: usize) -> &SurrogateFamily<S> {
        &self.constraints[i].family
    }

    /// Number of coupled (non-block) constraints.
    pub fn coupled_constraint_count(&self) -> usize {
        self.constraints.len()
    }

    /// Block structure, when the problem is separable.
    pub fn blocks(&self) -> Option<&BlockStructure> {
        self.blocks.as_ref().map(|b| &b.structure)
    }

    /// Feasible set of block `k`.
    pub fn block_set(&self, k: usize) -> Result<&FeasibleSet> {
        let b = self.blocks.as_ref().ok_or(Error::MissingBlocks)?;
        Ok(&b.sets[k])
    }

    /// Objective surrogate builder restricted to block `k`.
    pub fn block_objective_family(&self, k: usize) -> Result<&SurrogateFamily<S>> {
        let b = self.blocks.as_ref().ok_or(Error::MissingBlocks)?;
        Ok(&b.objective[k])
    }

    /// Surrogate builder for constraint `i` of block `k`.
    pub fn block_constraint_family(&self, k: usize, i: usize) -> Result<&SurrogateFamily<S>> {
        let b = self.blocks.as_ref().ok_or(Error::MissingBlocks)?;
        Ok(&b.constraints[k][i].family)
    }

    /// Per-sample function of constraint `i` of block `k` (argument is the
    /// block coordinate slice).
    pub fn block_constraint_fn(&self, k: usize, i: usize) -> Result<&SampledFn<S>> {
        let b = self.blocks.as_ref().ok_or(Error::MissingBlocks)?;
        Ok(&b.constraints[k][i].g)
    }

    /// The configured starting point, or the set's center.
    pub fn initial_point(&self) -> Result<DecisionVector> {
        match &self.initial_point {
            Some(x) => Ok(x.clone()),
            None => self.feasible.center(),
        }
    }

    /// Monte Carlo estimate of the expected objective `f_0(x)` from
    /// `samples` fresh draws seeded by `seed`.
    pub fn objective_estimate(&self, x: &[f64], samples: usize, seed: u64) -> Result<Estimate> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut rng = estimate_rng(seed);
        Ok(Estimate::from_values(
            (0..samples).map(|_| self.objective.value(x, &self.sample(&mut rng))),
        ))
    }

    /// Monte Carlo estimate of coupled constraint `i`'s expectation.
    pub fn constraint_estimate(
        &self,
        i: usize,
        x: &[f64],
        samples: usize,
        seed: u64,
    ) -> Result<Estimate> {
        if i >= self.constraints.len() {
            return Err(Error::InvalidProblem(format!(
                "constraint index {i} out of range ({} coupled constraints)",
                self.constraints.len()
            )));
        }
        let mut rng = estimate_rng(seed);
        Ok(Estimate::from_values(
            (0..samples).map(|_| self.constraints[i].g.value(x, &self.sample(&mut rng))),
        ))
    }
}

impl<S> std::fmt::Debug for StochasticProblem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StochasticProblem")
            .field("dimension", &self.dimension)
            .field("coupled_constraints", &self.constraints.len())
            .field("blocks", &self.blocks.as_ref().map(|b| b.structure.clone()))
            .finish_non_exhaustive()
    }
}

/// Builder for [`StochasticProblem`].
pub struct ProblemBuilder<S> {
    dimension: usize,
    feasible: FeasibleSet,
    sampler: SampleFn<S>,
    objective: Option<(SampledFn<S>, SurrogateFamily<S>)>,
    constraints: Vec<Constraint<S>>,
    block_ranges: Option<Vec<Range<usize>>>,
    block_objective: Vec<(usize, SurrogateFamily<S>)>,
    block_constraints: Vec<(usize, Constraint<S>)>,
    initial_point: Option<DecisionVector>,
}

impl<S> ProblemBuilder<S> {
    /// Sets the objective: per-sample value, gradient, surrogate builder.
    pub fn objective(
        mut self,
        value: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &S) -> Vec<f64> + Send + Sync + 'static,
        build: impl Fn(&[f64], &S) -> ConvexComponent + Send + Sync + 'static,
    ) -> Self {
        let dim = self.dimension;
        self.objective = Some((
            SampledFn::new(dim, value, gradient),
            SurrogateFamily::new(dim, build),
        ));
        self
    }

    /// Appends one coupled expectation constraint `E[g(x, xi)] <= 0`.
    pub fn constraint(
        mut self,
        value: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &S) -> Vec<f64> + Send + Sync + 'static,
        build: impl Fn(&[f64], &S) -> ConvexComponent + Send + Sync + 'static,
    ) -> Self {
        let dim = self.dimension;
        self.constraints.push(Constraint {
            g: SampledFn::new(dim, value, gradient),
            family: SurrogateFamily::new(dim, build),
        });
        self
    }

    /// Declares the block partition for the separable formulation.
    pub fn blocks(mut self, ranges: Vec<Range<usize>>) -> Self {
        self.block_ranges = Some(ranges);
        self
    }

    /// Objective surrogate restricted to block `k`: the builder receives the
    /// full-vector anchor and must return a component over the block's
    /// coordinates.
    pub fn block_objective(
        mut self,
        k: usize,
        block_dim: usize,
        build: impl Fn(&[f64], &S) -> ConvexComponent + Send + Sync + 'static,
    ) -> Self {
        self.block_objective
            .push((k, SurrogateFamily::new(block_dim, build)));
        self
    }

    /// Appends a constraint owned by block `k`; its sampled function takes
    /// the block coordinates only.
    pub fn block_constraint(
        mut self,
        k: usize,
        block_dim: usize,
        value: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &S) -> Vec<f64> + Send + Sync + 'static,
        build: impl Fn(&[f64], &S) -> ConvexComponent + Send + Sync + 'static,
    ) -> Self {
        self.block_constraints.push((
            k,
            Constraint {
                g: SampledFn::new(block_dim, value, gradient),
                family: SurrogateFamily::new(block_dim, build),
            },
        ));
        self
    }

    /// Sets the starting iterate (must lie in the feasible set).
    pub fn initial_point(mut self, x: DecisionVector) -> Self {
        self.initial_point = Some(x);
        self
    }

    /// Validates and assembles the problem.
    pub fn build(self) -> Result<StochasticProblem<S>> {
        let (objective, objective_family) = self
            .objective
            .ok_or_else(|| Error::InvalidProblem("objective not set".into()))?;

        if let Some(x0) = &self.initial_point {
            if x0.len() != self.dimension {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    got: x0.len(),
                });
            }
            if !self.feasible.contains(x0) {
                return Err(Error::InvalidProblem(
                    "initial point lies outside the feasible set".into(),
                ));
            }
        }

        let blocks = match self.block_ranges {
            None => {
                if !self.block_objective.is_empty() || !self.block_constraints.is_empty() {
                    return Err(Error::InvalidProblem(
                        "block families given without a block partition".into(),
                    ));
                }
                None
            }
            Some(ranges) => {
                let mut structure = BlockStructure::new(ranges, self.dimension)?;
                let kk = structure.block_count();
                let mut objective_fams: Vec<Option<SurrogateFamily<S>>> =
                    (0..kk).map(|_| None).collect();
                for (k, fam) in self.block_objective {
                    if k >= kk {
                        return Err(Error::InvalidBlocks(format!(
                            "objective family references block {k}, only {kk} blocks"
                        )));
                    }
                    let want = structure.range(k).len();
                    if fam.domain_dimension() != want {
                        return Err(Error::DimensionMismatch {
                            expected: want,
                            got: fam.domain_dimension(),
                        });
                    }
                    if objective_fams[k].replace(fam).is_some() {
                        return Err(Error::InvalidBlocks(format!(
                            "duplicate objective family for block {k}"
                        )));
                    }
                }
                let mut constraints: Vec<Vec<Constraint<S>>> =
                    (0..kk).map(|_| Vec::new()).collect();
                for (k, c) in self.block_constraints {
                    if k >= kk {
                        return Err(Error::InvalidBlocks(format!(
                            "constraint references block {k}, only {kk} blocks"
                        )));
                    }
                    let want = structure.range(k).len();
                    if c.g.dimension() != want || c.family.domain_dimension() != want {
                        return Err(Error::DimensionMismatch {
                            expected: want,
                            got: c.g.dimension().max(c.family.domain_dimension()),
                        });
                    }
                    constraints[k].push(c);
                }
                let objective = objective_fams
                    .into_iter()
                    .enumerate()
                    .map(|(k, f)| {
                        f.ok_or_else(|| {
                            Error::InvalidBlocks(format!("block {k} lacks an objective family"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sets = structure
                    .ranges()
                    .iter()
                    .map(|r| self.feasible.restrict(r.clone()))
                    .collect::<Result<Vec<_>>>()?;
                structure.constraint_counts =
                    constraints.iter().map(|c| c.len()).collect();
                Some(BlockFamilies {
                    structure,
                    objective,
                    constraints,
                    sets,
                })
            }
        };

        if blocks.is_some() && !self.constraints.is_empty() {
            return Err(Error::InvalidProblem(
                "a problem is either coupled (constraints) or separable (block constraints), \
                 not both"
                    .into(),
            ));
        }

        Ok(StochasticProblem {
            dimension: self.dimension,
            feasible: self.feasible,
            sampler: self.sampler,
            objective,
            objective_family,
            constraints: self.constraints,
            blocks,
            initial_point: self.initial_point,
        })
    }
}

/// Penalty configuration for the exact-penalty reformulation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Slack penalty coefficient `rho > 0`.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Geometric growth applied to `rho` after each failed restart; must be
    /// at least 1 (1 disables growth).
    #[serde(default = "default_rho_growth")]
    pub rho_growth: f64,
}

fn default_rho() -> f64 {
    0.5
}

fn default_rho_growth() -> f64 {
    1.0
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            rho: default_rho(),
            rho_growth: default_rho_growth(),
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::InvalidPenalty(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !self.rho_growth.is_finite() || self.rho_growth < 1.0 {
            return Err(Error::InvalidPenalty(format!(
                "rho_growth must be >= 1, got {}",
                self.rho_growth
            )));
        }
        Ok(())
    }
}

/// Exact-penalty view of a problem: constraint violations enter the
/// objective as `rho * sum_i s_i` with `s_i = max(0, f_i(x))`.
///
/// The slack variables of the lifted formulation are eliminated
/// analytically — at any fixed `x`, the optimal slack is exactly the hinge
/// of the constraint value — so this view never materializes them.
pub struct PenalizedProblem<'a, S> {
    problem: &'a StochasticProblem<S>,
    rho: f64,
}

/// Builds the exact-penalty view of `problem` with the given coefficient.
pub fn penalize<'a, S>(
    problem: &'a StochasticProblem<S>,
    penalty: &PenaltyConfig,
) -> Result<PenalizedProblem<'a, S>> {
    penalty.validate()?;
    Ok(PenalizedProblem {
        problem,
        rho: penalty.rho,
    })
}

impl<'a, S> std::fmt::Debug for PenalizedProblem<'a, S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PenalizedProblem")
            .field("rho", &self.rho)
            .field("slack_count", &self.slack_count())
            .finish_non_exhaustive()
    }
}

impl<'a, S> PenalizedProblem<'a, S> {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of eliminated slack variables (= number of constraints).
    pub fn slack_count(&self) -> usize {
        self.problem.constraint_count()
    }

    /// Optimal slacks at fixed constraint values: `s_i = max(0, f_i)`.
    pub fn slacks_from_values(values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v.max(0.0)).collect()
    }

    /// Monte Carlo estimate of the penalized objective
    /// `f_0(x) + rho * sum_i max(0, f_i(x))` for coupled problems.
    ///
    /// Each expectation is estimated from `samples` draws; the hinge is
    /// applied to the estimated means, mirroring the analytic slack
    /// elimination.
    pub fn objective_estimate(&self, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
        let mut total = self.problem.objective_estimate(x, samples, seed)?.mean;
        for i in 0..self.problem.coupled_constraint_count() {
            let fi = self
                .problem
                .constraint_estimate(i, x, samples, seed.wrapping_add(1 + i as u64))?
                .mean;
            total += self.rho * fi.max(0.0);
        }
        Ok(total)
    }
}
