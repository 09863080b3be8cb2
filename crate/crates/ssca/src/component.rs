//! Convex building blocks for sample-averaged surrogate models.
//!
//! Each outer iteration contributes one convex function of the decision
//! vector; the running surrogate is a weighted sum of these components.
//! Components are immutable and cheaply cloneable so that snapshots of a
//! surrogate can be shared across concurrent block solves.

use std::sync::Arc;

/// A convex function with a gradient, evaluated on the solver hot path.
///
/// Implementations must be deterministic and pure. `add_scaled_gradient`
/// accumulates `scale * gradient(x)` into `acc`, which lets the surrogate
/// fold hundreds of component gradients into one buffer without allocating.
pub trait SurrogateComponent: Send + Sync {
    /// Function value at `x`.
    fn value(&self, x: &[f64]) -> f64;

    /// Accumulates `scale * gradient(x)` into `acc` (`acc.len() == x.len()`).
    fn add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]);

    /// Fused value + gradient accumulation. Override when the two share
    /// intermediate work (the default recomputes).
    fn value_and_add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) -> f64 {
        let v = self.value(x);
        self.add_scaled_gradient(x, scale, acc);
        v
    }

    /// Lower bound on the strong-convexity modulus of the component, used
    /// by the inner solver to pick step sizes. Zero (the default) is always
    /// sound; override only with a certified bound.
    fn curvature_lower_bound(&self) -> f64 {
        0.0
    }
}

/// One convex component of a surrogate, tagged with the anchor point and
/// sample identifier that produced it.
#[derive(Clone)]
pub struct ConvexComponent {
    fun: Arc<dyn SurrogateComponent>,
    dim: usize,
    anchor: Option<Arc<[f64]>>,
    sample_id: Option<u64>,
}

impl ConvexComponent {
    /// Wraps a convex function of a `dim`-dimensional argument.
    pub fn new(dim: usize, fun: impl SurrogateComponent + 'static) -> Self {
        ConvexComponent {
            fun: Arc::new(fun),
            dim,
            anchor: None,
            sample_id: None,
        }
    }

    /// Attaches provenance metadata (set by the surrogate engine on update).
    pub(crate) fn with_metadata(mut self, anchor: Arc<[f64]>, sample_id: u64) -> Self {
        self.anchor = Some(anchor);
        self.sample_id = Some(sample_id);
        self
    }

    /// Dimension of the component's argument.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Anchor point this component was built around, when known.
    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref()
    }

    /// Identifier of the sample that produced this component, when known.
    pub fn sample_id(&self) -> Option<u64> {
        self.sample_id
    }

    /// Function value at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.fun.value(x)
    }

    /// Accumulates `scale * gradient(x)` into `acc`.
    pub fn add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(acc.len(), self.dim);
        self.fun.add_scaled_gradient(x, scale, acc);
    }

    /// Fused value + scaled-gradient accumulation.
    pub fn value_and_add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.fun.value_and_add_scaled_gradient(x, scale, acc)
    }

    /// Gradient at `x` as a fresh vector (test and diagnostic use).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.add_scaled_gradient(x, 1.0, &mut g);
        g
    }

    /// Certified lower bound on the component's strong-convexity modulus.
    pub fn curvature_lower_bound(&self) -> f64 {
        self.fun.curvature_lower_bound()
    }
}

impl std::fmt::Debug for ConvexComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexComponent")
            .field("dim", &self.dim)
            .field("sample_id", &self.sample_id)
            .finish_non_exhaustive()
    }
}

/// Separable quadratic `sum_d coeffs[d] * (x[d] - center[d])^2 + linear . x + constant`.
///
/// Convex whenever every `coeffs[d] >= 0`; the workhorse for analytic test
/// problems because its weighted averages stay in the same family.
#[derive(Clone, Debug)]
pub struct QuadraticComponent {
    pub coeffs: Vec<f64>,
    pub center: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticComponent {
    /// Pure squared distance `sum_d c_d (x_d - a_d)^2`.
    pub fn centered(coeffs: Vec<f64>, center: Vec<f64>) -> Self {
        let n = coeffs.len();
        QuadraticComponent {
            coeffs,
            center,
            linear: vec![0.0; n],
            constant: 0.0,
        }
    }
}

impl SurrogateComponent for QuadraticComponent {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for d in 0..x.len() {
            let dx = x[d] - self.center[d];
            v += self.coeffs[d] * dx * dx + self.linear[d] * x[d];
        }
        v
    }

    fn add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) {
        for d in 0..x.len() {
            acc[d] += scale * (2.0 * self.coeffs[d] * (x[d] - self.center[d]) + self.linear[d]);
        }
    }

    fn curvature_lower_bound(&self) -> f64 {
        // The Hessian is diag(2 c_d); the modulus is twice the smallest
        // coefficient, floored at zero for merely-convex components.
        match self.coeffs.iter().copied().fold(f64::INFINITY, f64::min) {
            m if m.is_finite() => m.max(0.0) * 2.0,
            _ => 0.0,
        }
    }
}

/// A constant function (zero gradient). Convex; used e.g. for constraints
/// whose sampled form does not depend on the decision vector.
#[derive(Clone, Copy, Debug)]
pub struct ConstantComponent(pub f64);

impl SurrogateComponent for ConstantComponent {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }

    fn add_scaled_gradient(&self, _x: &[f64], _scale: f64, _acc: &mut [f64]) {}
}

/// Adapter for arbitrary closure pairs, mostly for tests and examples.
pub struct FnComponent<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> FnComponent<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: V, gradient: G) -> Self {
        FnComponent { value, gradient }
    }
}

impl<V, G> SurrogateComponent for FnComponent<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) {
        let g = (self.gradient)(x);
        for d in 0..acc.len() {
            acc[d] += scale * g[d];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::central_difference_gradient;

    #[test]
    fn quadratic_value_and_gradient_agree_with_finite_differences() {
        let q = QuadraticComponent {
            coeffs: vec![1.5, 0.5],
            center: vec![0.3, -0.7],
            linear: vec![0.2, -0.4],
            constant: 1.0,
        };
        let c = ConvexComponent::new(2, q);
        for x in [[0.0, 0.0], [1.0, -1.0], [0.25, 0.5]] {
            let fd = central_difference_gradient(|y| c.value(y), &x, 1e-6);
            let g = c.gradient(&x);
            for d in 0..2 {
                assert!(
                    (g[d] - fd[d]).abs() <= 1e-5 * (1.0 + g[d].abs()),
                    "gradient mismatch at {x:?}: {g:?} vs {fd:?}"
                );
            }
        }
    }

    #[test]
    fn fused_path_matches_split_path() {
        let q = QuadraticComponent::centered(vec![2.0, 1.0, 0.5], vec![1.0, 2.0, 3.0]);
        let c = ConvexComponent::new(3, q);
        let x = [0.1, 0.2, 0.3];
        let mut acc1 = vec![0.0; 3];
        let v1 = c.value_and_add_scaled_gradient(&x, 0.75, &mut acc1);
        let mut acc2 = vec![0.0; 3];
        let v2 = c.value(&x);
        c.add_scaled_gradient(&x, 0.75, &mut acc2);
        assert_eq!(v1, v2);
        assert_eq!(acc1, acc2);
    }

    #[test]
    fn constant_component_has_zero_gradient() {
        let c = ConvexComponent::new(2, ConstantComponent(4.5));
        assert_eq!(c.value(&[1.0, 2.0]), 4.5);
        assert_eq!(c.gradient(&[1.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_accumulation_scales_and_sums() {
        let a = QuadraticComponent::centered(vec![1.0], vec![0.0]);
        let b = QuadraticComponent::centered(vec![1.0], vec![2.0]);
        let ca = ConvexComponent::new(1, a);
        let cb = ConvexComponent::new(1, b);
        let mut acc = vec![0.0];
        ca.add_scaled_gradient(&[1.0], 0.5, &mut acc); // 0.5 * 2*1*(1-0) = 1.0
        cb.add_scaled_gradient(&[1.0], 0.5, &mut acc); // 0.5 * 2*1*(1-2) = -1.0
        assert!((acc[0] - 0.0).abs() < 1e-15);
    }
}
