//! The recursively averaged convex surrogate.
//!
//! At outer iteration `t` the model of each expectation function is
//!
//! ```text
//! f_bar^t = (1 - w_t) * f_bar^(t-1) + w_t * g_hat(., anchor_t, sample_t),
//! ```
//!
//! starting from `f_bar^0 = 0`. Expanding the recursion, `f_bar^t` is a
//! weighted sum of per-sample convex components, which is exactly how
//! [`SurrogateState`] stores it: a list of `(weight, component)` pairs in
//! insertion order. Updates rescale existing weights by `1 - w_t` and push
//! the new component with weight `w_t`; components whose weight has decayed
//! below a threshold are dropped (their mass is surfaced, never silently
//! renormalized away).

use std::sync::Arc;

use crate::component::ConvexComponent;
use crate::error::{Error, Result};

/// Default weight below which a component is discarded.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-8;
/// Default cap on the number of stored components.
pub const DEFAULT_MAX_COMPONENTS: usize = 10_000;

/// Weighted component list representing one recursively averaged surrogate.
#[derive(Clone)]
pub struct SurrogateState {
    dim: usize,
    components: Vec<(f64, ConvexComponent)>,
    updates: usize,
    prune_threshold: f64,
    max_components: usize,
    pruned_mass: f64,
}

impl SurrogateState {
    /// The zero surrogate over a `dim`-dimensional argument, with the
    /// default pruning policy.
    pub fn empty(dim: usize) -> Self {
        SurrogateState {
            dim,
            components: Vec::new(),
            updates: 0,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            max_components: DEFAULT_MAX_COMPONENTS,
            pruned_mass: 0.0,
        }
    }

    /// Overrides the pruning policy. `threshold` must be a finite
    /// nonnegative weight and `cap` at least 1.
    pub fn with_policy(mut self, threshold: f64, cap: usize) -> Result<Self> {
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(Error::InvalidProblem(format!(
                "prune threshold must be finite and nonnegative, got {threshold}"
            )));
        }
        if cap == 0 {
            return Err(Error::InvalidProblem("component cap must be at least 1".into()));
        }
        self.prune_threshold = threshold;
        self.max_components = cap;
        Ok(self)
    }

    /// Argument dimension.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of updates applied so far.
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Number of live components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// True before the first update (or after everything pruned away).
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Sum of live component weights. Approaches 1 as updates accumulate,
    /// minus whatever mass pruning discarded.
    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// Certified strong-convexity modulus of the mixture: the weighted sum
    /// of the components' curvature lower bounds. Zero whenever any
    /// component declines to certify curvature.
    pub fn strong_convexity(&self) -> f64 {
        self.components
            .iter()
            .map(|(w, c)| w * c.curvature_lower_bound())
            .sum()
    }

    /// Total weight discarded by pruning since creation, measured at the
    /// moment of removal.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    /// Live `(weight, component)` pairs in insertion order.
    pub fn components(&self) -> impl Iterator<Item = (f64, &ConvexComponent)> {
        self.components.iter().map(|(w, c)| (*w, c))
    }

    /// Applies one averaging step: rescales existing weights by
    /// `1 - omega`, appends `component` with weight `omega`, then prunes.
    ///
    /// `anchor` and `sample_id` are recorded as component metadata.
    pub fn update(
        self,
        anchor: &[f64],
        sample_id: u64,
        omega: f64,
        component: ConvexComponent,
    ) -> Result<Self> {
        self.update_batch(anchor, sample_id, omega, vec![component])
    }

    /// Minibatch variant: the `b` components of one iteration enter with
    /// weight `omega / b` each, i.e. the recursion is applied to their
    /// average.
    pub fn update_batch(
        mut self,
        anchor: &[f64],
        sample_id: u64,
        omega: f64,
        batch: Vec<ConvexComponent>,
    ) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::WeightOutOfRange(omega));
        }
        if batch.is_empty() {
            return Err(Error::InvalidProblem("empty surrogate update batch".into()));
        }
        for c in &batch {
            if c.dimension() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: c.dimension(),
                });
            }
        }
        let keep = 1.0 - omega;
        for (w, _) in self.components.iter_mut() {
            *w *= keep;
        }
        let share = omega / batch.len() as f64;
        let anchor: Arc<[f64]> = Arc::from(anchor);
        for c in batch {
            self.components
                .push((share, c.with_metadata(anchor.clone(), sample_id)));
        }
        self.updates += 1;
        Ok(self.pruned())
    }

    /// Applies the pruning policy: drops components below the weight
    /// threshold, then evicts lightest-first (oldest breaking ties) until
    /// the cap is met. Discarded mass accumulates in [`Self::pruned_mass`].
    pub fn pruned(mut self) -> Self {
        if self.prune_threshold > 0.0 {
            let threshold = self.prune_threshold;
            let mut dropped = 0.0;
            self.components.retain(|(w, _)| {
                if *w < threshold {
                    dropped += *w;
                    false
                } else {
                    true
                }
            });
            self.pruned_mass += dropped;
        }
        while self.components.len() > self.max_components {
            let mut min_idx = 0;
            let mut min_w = f64::INFINITY;
            for (i, (w, _)) in self.components.iter().enumerate() {
                if *w < min_w {
                    min_w = *w;
                    min_idx = i;
                }
            }
            self.pruned_mass += min_w;
            self.components.remove(min_idx);
        }
        self
    }

    /// Surrogate value at `x`; the empty surrogate is identically zero.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.components.iter().map(|(w, c)| w * c.value(x)).sum()
    }

    /// Surrogate gradient at `x` into a fresh vector.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    /// Accumulating gradient: zeroes `out` and adds the weighted component
    /// gradients in insertion order (deterministic summation order).
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        for (w, c) in &self.components {
            c.add_scaled_gradient(x, *w, out);
        }
    }

    /// Fused value and gradient, sharing per-component intermediates.
    pub fn value_and_gradient_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        debug_assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        let mut v = 0.0;
        for (w, c) in &self.components {
            v += *w * c.value_and_add_scaled_gradient(x, *w, out);
        }
        v
    }
}

impl std::fmt::Debug for SurrogateState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurrogateState")
            .field("dim", &self.dim)
            .field("components", &self.components.len())
            .field("updates", &self.updates)
            .field("weight_sum", &self.weight_sum())
            .field("pruned_mass", &self.pruned_mass)
            .finish()
    }
}
