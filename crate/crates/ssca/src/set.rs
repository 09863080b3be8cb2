//! Feasible sets and Euclidean projection.
//!
//! The solver only ever touches the feasible set through two operations:
//! projecting a point onto it and (for restarts) drawing a uniform point
//! from it. Boxes get exact closed-form treatment; anything else is
//! supplied by the caller as a projection operator.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type ProjectFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A closed convex feasible set supporting Euclidean projection.
#[derive(Clone)]
pub struct FeasibleSet {
    kind: SetKind,
}

#[derive(Clone)]
enum SetKind {
    /// Axis-aligned box `{ x : lower <= x <= upper }` (componentwise).
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Arbitrary closed convex set given by a user projection operator.
    Generic { dim: usize, project: Arc<ProjectFn> },
}

impl fmt::Debug for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SetKind::Box { lower, upper } => f
                .debug_struct("FeasibleSet::Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            SetKind::Generic { dim, .. } => f
                .debug_struct("FeasibleSet::Generic")
                .field("dim", dim)
                .finish_non_exhaustive(),
        }
    }
}

impl FeasibleSet {
    /// Builds a bounded box `[lower[i], upper[i]]` per coordinate.
    ///
    /// Bounds must be finite with `lower[i] <= upper[i]`; violations report
    /// the offending coordinate.
    pub fn bounded_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] > upper[i] {
                return Err(Error::InvalidBounds { index: i });
            }
        }
        Ok(FeasibleSet {
            kind: SetKind::Box { lower, upper },
        })
    }

    /// Wraps a user-supplied Euclidean projection operator.
    ///
    /// The operator must map any `dim`-vector to a point of the set and be
    /// the identity on the set itself; those properties are the caller's
    /// responsibility and are exercised by this crate's tests for the
    /// built-in sets only.
    pub fn generic(
        dim: usize,
        project: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FeasibleSet {
            kind: SetKind::Generic {
                dim,
                project: Arc::new(project),
            },
        }
    }

    /// Ambient dimension of the set.
    pub fn dimension(&self) -> usize {
        match &self.kind {
            SetKind::Box { lower, .. } => lower.len(),
            SetKind::Generic { dim, .. } => *dim,
        }
    }

    /// Box bounds when this set is a box.
    pub fn bounds(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            SetKind::Box { lower, upper } => Some((lower, upper)),
            SetKind::Generic { .. } => None,
        }
    }

    /// Euclidean diameter when it is known (boxes only).
    pub fn diameter(&self) -> Option<f64> {
        self.bounds().map(|(lower, upper)| {
            lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt()
        })
    }

    /// Euclidean projection of `y` onto the set.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: y.len(),
            });
        }
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
                .collect(),
            SetKind::Generic { project, .. } => {
                let p = project(y);
                if p.len() != self.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension(),
                        got: p.len(),
                    });
                }
                p
            }
        })
    }

    /// In-place projection used on solver hot paths (boxes only fall back
    /// to allocation-free clamping).
    pub(crate) fn project_in_place(&self, y: &mut Vec<f64>) -> Result<()> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for i in 0..y.len() {
                    y[i] = y[i].clamp(lower[i], upper[i]);
                }
                Ok(())
            }
            SetKind::Generic { .. } => {
                *y = self.project(y)?;
                Ok(())
            }
        }
    }

    /// True when `x` lies in the set (up to projection identity).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.project(x) {
            Ok(p) => p
                .iter()
                .zip(x.iter())
                .all(|(&a, &b)| a == b || (a.is_nan() && b.is_nan())),
            Err(_) => false,
        }
    }

    /// Midpoint of a box, or the projection of the origin for generic sets.
    /// Used as the default initial iterate when the problem does not name one.
    pub fn center(&self) -> Result<Vec<f64>> {
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(lower
                .iter()
                .zip(upper.iter())
                .map(|(&lo, &hi)| 0.5 * (lo + hi))
                .collect()),
            SetKind::Generic { dim, .. } => self.project(&vec![0.0; *dim]),
        }
    }

    /// Draws a uniform point from a box; generic sets project a draw from
    /// the unit cube, which lands in the set but is not uniform there.
    pub fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(lower
                .iter()
                .zip(upper.iter())
                .map(|(&lo, &hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect()),
            SetKind::Generic { dim, .. } => {
                let raw: Vec<f64> = (0..*dim).map(|_| rng.random::<f64>()).collect();
                self.project(&raw)
            }
        }
    }

    /// The sub-box spanned by `range` of a box set. Used to hand each block
    /// of a separable problem its own feasible set.
    pub fn restrict(&self, range: Range<usize>) -> Result<FeasibleSet> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                if range.end > lower.len() || range.start > range.end {
                    return Err(Error::InvalidBlocks(format!(
                        "range {range:?} exceeds dimension {}",
                        lower.len()
                    )));
                }
                FeasibleSet::bounded_box(
                    lower[range.clone()].to_vec(),
                    upper[range].to_vec(),
                )
            }
            SetKind::Generic { .. } => Err(Error::InvalidProblem(
                "block restriction requires a box feasible set".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn box_projection_clamps_each_coordinate() {
        let set = FeasibleSet::bounded_box(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let p = set.project(&[2.0, -3.0]).unwrap();
        assert_eq!(p, vec![1.0, -1.0]);
        let p = set.project(&[0.5, 0.25]).unwrap();
        assert_eq!(p, vec![0.5, 0.25]);
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let set = FeasibleSet::bounded_box(vec![-2.0, 0.0, 1.0], vec![2.0, 5.0, 1.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let y: Vec<f64> = (0..3).map(|_| (rng.random::<f64>() - 0.5) * 20.0).collect();
            let z: Vec<f64> = (0..3).map(|_| (rng.random::<f64>() - 0.5) * 20.0).collect();
            let py = set.project(&y).unwrap();
            let pz = set.project(&z).unwrap();
            let ppy = set.project(&py).unwrap();
            assert_eq!(py, ppy, "projection must be idempotent");
            let d_before: f64 = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_after: f64 = py.iter().zip(&pz).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(d_after <= d_before + 1e-12, "projection must be nonexpansive");
        }
    }

    #[test]
    fn invalid_bounds_name_the_coordinate() {
        let err = FeasibleSet::bounded_box(vec![0.0, 3.0], vec![1.0, 2.0]).unwrap_err();
        assert_eq!(err, Error::InvalidBounds { index: 1 });
        let err = FeasibleSet::bounded_box(vec![f64::NAN], vec![1.0]).unwrap_err();
        assert_eq!(err, Error::InvalidBounds { index: 0 });
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let set = FeasibleSet::bounded_box(vec![0.0], vec![1.0]).unwrap();
        let err = set.project(&[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn generic_set_uses_supplied_projector() {
        // Projection onto the nonnegative orthant.
        let set = FeasibleSet::generic(2, |y| y.iter().map(|v| v.max(0.0)).collect());
        assert_eq!(set.project(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        assert!(set.contains(&[0.0, 1.0]));
        assert!(!set.contains(&[-0.1, 1.0]));
    }

    #[test]
    fn restrict_slices_a_box() {
        let set = FeasibleSet::bounded_box(vec![0.0, 1.0, 2.0], vec![10.0, 11.0, 12.0]).unwrap();
        let sub = set.restrict(1..3).unwrap();
        assert_eq!(sub.dimension(), 2);
        assert_eq!(sub.project(&[0.0, 20.0]).unwrap(), vec![1.0, 12.0]);
    }

    #[test]
    fn uniform_samples_stay_inside_the_box() {
        let set = FeasibleSet::bounded_box(vec![-1.0, 5.0], vec![1.0, 6.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let x = set.sample_uniform(&mut rng).unwrap();
            assert!(set.contains(&x));
        }
    }
}
