//! Numeric verification helpers: finite differences, convexity probes,
//! tangency gaps, and Monte Carlo summaries.
//!
//! These utilities exist so that every analytic gradient and every
//! surrogate construction in this crate (and downstream test suites) can
//! be checked against an independent numerical route.

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Computes mean and standard error of `values` (population of i.i.d.
    /// draws) using a single Welford pass.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Estimate {
        let mut n = 0usize;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let std_error = if n > 1 {
            (m2 / ((n - 1) as f64 * n as f64)).sqrt()
        } else {
            f64::INFINITY
        };
        Estimate {
            mean,
            std_error,
            samples: n,
        }
    }

    /// Half-width of the `k`-sigma interval around the mean.
    pub fn half_width(&self, k: f64) -> f64 {
        k * self.std_error
    }
}

/// Central-difference gradient of `f` at `x` with absolute step `h`.
pub fn central_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for d in 0..x.len() {
        let step = h * (1.0 + x[d].abs());
        xp[d] = x[d] + step;
        xm[d] = x[d] - step;
        g[d] = (f(&xp) - f(&xm)) / (2.0 * step);
        xp[d] = x[d];
        xm[d] = x[d];
    }
    g
}

/// Largest componentwise relative deviation between two gradients,
/// normalized by `1 + |reference|`.
pub fn max_relative_gap(candidate: &[f64], reference: &[f64]) -> f64 {
    candidate
        .iter()
        .zip(reference.iter())
        .map(|(&c, &r)| (c - r).abs() / (1.0 + r.abs()))
        .fold(0.0, f64::max)
}

/// Midpoint convexity violation of `f` along the segment `[a, b]`:
/// `f((a+b)/2) - (f(a)+f(b))/2`, positive when convexity is violated.
pub fn midpoint_convexity_violation(f: impl Fn(&[f64]) -> f64, a: &[f64], b: &[f64]) -> f64 {
    let mid: Vec<f64> = a.iter().zip(b.iter()).map(|(&x, &y)| 0.5 * (x + y)).collect();
    f(&mid) - 0.5 * (f(a) + f(b))
}

/// Infinity norm of the difference of two vectors.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// L1 norm of a vector.
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Brute-force minimizer of `f` over the box `[lower, upper]` by multilevel
/// grid refinement: each level lays `points` samples per dimension over the
/// current sub-box, then zooms into a window two grid cells wide around the
/// best point (clamped to the original box).
///
/// For continuous `f` this brackets a global grid minimum at resolution
/// `spacing * (2 / (points - 1))^(levels - 1)`; for convex `f` the true
/// minimizer lies within one initial cell of the level-1 argmin, so zooming
/// is exact. Exponential in the dimension — intended as an independent
/// oracle for low-dimensional tests, not as a solver.
pub fn grid_minimize(
    f: impl Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    points: usize,
    levels: usize,
) -> (Vec<f64>, f64) {
    assert!(points >= 2 && levels >= 1);
    let n = lower.len();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut best_x = lo.clone();
    let mut best_v = f64::INFINITY;
    for _ in 0..levels {
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut level_best = (vec![0.0; n], f64::INFINITY);
        'grid: loop {
            for d in 0..n {
                let t = idx[d] as f64 / (points - 1) as f64;
                x[d] = lo[d] + t * (hi[d] - lo[d]);
            }
            let v = f(&x);
            if v < level_best.1 {
                level_best = (x.clone(), v);
            }
            for d in 0..n {
                idx[d] += 1;
                if idx[d] < points {
                    continue 'grid;
                }
                idx[d] = 0;
            }
            break;
        }
        if level_best.1 < best_v {
            (best_x, best_v) = level_best.clone();
        }
        for d in 0..n {
            let cell = (hi[d] - lo[d]) / (points - 1) as f64;
            lo[d] = (level_best.0[d] - cell).max(lower[d]);
            hi[d] = (level_best.0[d] + cell).min(upper[d]);
        }
    }
    (best_x, best_v)
}
