//! Ergodic-rate power control over fading interference channels.
//!
//! `K` transmitter–receiver pairs share a spectrum. Link gains
//! `h[k][j]` (transmitter `j` into receiver `k`) are exponentially
//! distributed with known means; only their realizations are observable.
//! With transmit powers `p` in the box `[0, P]`, user `k` attains the
//! instantaneous rate (natural log, nats per channel use)
//!
//! ```text
//! r_k(p, h) = ln(1 + h[k][k] p_k / (noise_k + sum_{j != k} h[k][j] p_j)).
//! ```
//!
//! This module instantiates the solver for two formulations of
//! "maximize the expected sum rate subject to per-user expected rate
//! floors":
//!
//! * [`coupled_problem`] — the rate floors `E[r_k] >= req_k` couple all
//!   powers, so the serial driver solves one `K`-dimensional subproblem
//!   per iteration.
//! * [`decoupled_problem`] — each floor is replaced by the conservative
//!   bound computed as if all interferers transmitted at full power,
//!   which depends on `p_k` alone. The problem then splits into scalar
//!   blocks for the block-parallel driver.
//!
//! Every surrogate here is a sum of negated logs of affine functions plus
//! a linear correction ([`NegLogAffine`]): the rate terms that are already
//! convex in the varying coordinates are kept exactly, and the remaining
//! concave terms are linearized around the anchor, which preserves value
//! and gradient there.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::component::{ConvexComponent, SurrogateComponent};
use crate::diagnostics::Estimate;
use crate::error::{Error, Result};
use crate::problem::StochasticProblem;
use crate::rng::estimate_rng;
use crate::set::FeasibleSet;

/// Static description of the interference network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkModel {
    /// Per-user transmit power caps `P_k > 0`.
    pub power_limits: Vec<f64>,
    /// Receiver noise variances, `noise_vars[k] > 0`.
    pub noise_vars: Vec<f64>,
    /// Per-user expected-rate floors in nats, `rate_reqs[k] >= 0`.
    pub rate_reqs: Vec<f64>,
    /// Mean link gains: `gain_means[k][j] > 0` is the expectation of the
    /// exponentially distributed power gain from transmitter `j` into
    /// receiver `k`.
    pub gain_means: Vec<Vec<f64>>,
}

impl NetworkModel {
    /// Builds and validates a model from its raw parameters.
    pub fn new(
        power_limits: Vec<f64>,
        noise_vars: Vec<f64>,
        rate_reqs: Vec<f64>,
        gain_means: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let model = NetworkModel {
            power_limits,
            noise_vars,
            rate_reqs,
            gain_means,
        };
        model.validate()?;
        Ok(model)
    }

    /// A network of `users` identical pairs: common power cap, noise
    /// variance, and rate floor, mean gain `direct_gain` on every direct
    /// link and `cross_gain` on every interfering link.
    pub fn symmetric(
        users: usize,
        power: f64,
        noise_var: f64,
        rate_req: f64,
        direct_gain: f64,
        cross_gain: f64,
    ) -> Result<Self> {
        let gain_means = (0..users)
            .map(|k| {
                (0..users)
                    .map(|j| if j == k { direct_gain } else { cross_gain })
                    .collect()
            })
            .collect();
        NetworkModel::new(
            vec![power; users],
            vec![noise_var; users],
            vec![rate_req; users],
            gain_means,
        )
    }

    /// The five-user symmetric network used by the bundled benchmark
    /// configurations: power cap 100, unit noise, rate floor 1 nat,
    /// direct-gain mean 1, cross-gain mean 0.1.
    pub fn five_user() -> Self {
        NetworkModel::symmetric(5, 100.0, 1.0, 1.0, 1.0, 0.1)
            .expect("static parameters are valid")
    }

    /// Number of transmitter–receiver pairs.
    pub fn users(&self) -> usize {
        self.power_limits.len()
    }

    /// Checks dimensions and parameter ranges. Reports the offending field
    /// and entry index (`gain_means` indices are flattened row-major).
    pub fn validate(&self) -> Result<()> {
        let users = self.users();
        if users == 0 {
            return Err(Error::InvalidProblem(
                "the network needs at least one user".into(),
            ));
        }
        for (len, _name) in [
            (self.noise_vars.len(), "noise_vars"),
            (self.rate_reqs.len(), "rate_reqs"),
            (self.gain_means.len(), "gain_means"),
        ] {
            if len != users {
                return Err(Error::DimensionMismatch {
                    expected: users,
                    got: len,
                });
            }
        }
        for (i, &v) in self.power_limits.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidModel {
                    field: "power_limits",
                    index: i,
                });
            }
        }
        for (i, &v) in self.noise_vars.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidModel {
                    field: "noise_vars",
                    index: i,
                });
            }
        }
        for (i, &v) in self.rate_reqs.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidModel {
                    field: "rate_reqs",
                    index: i,
                });
            }
        }
        for (k, row) in self.gain_means.iter().enumerate() {
            if row.len() != users {
                return Err(Error::DimensionMismatch {
                    expected: users,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidModel {
                        field: "gain_means",
                        index: k * users + j,
                    });
                }
            }
        }
        Ok(())
    }

    /// Draws one realization of all `K x K` link gains via inverse-CDF
    /// exponential sampling (row-major order, so the stream is stable).
    pub fn sample_channels(&self, rng: &mut ChaCha8Rng) -> ChannelSample {
        let gains = self
            .gain_means
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&mean| -mean * (1.0 - rng.random::<f64>()).ln())
                    .collect()
            })
            .collect();
        ChannelSample { gains }
    }

    /// Total and interference-plus-noise powers at receiver `k`:
    /// `(noise_k + sum_j h[k][j] p_j, noise_k + sum_{j != k} h[k][j] p_j)`.
    fn received_powers(&self, sample: &ChannelSample, p: &[f64], k: usize) -> (f64, f64) {
        let row = &sample.gains[k];
        let mut total = self.noise_vars[k];
        for j in 0..p.len() {
            total += row[j] * p[j];
        }
        (total, total - row[k] * p[k])
    }

    /// Instantaneous rate of user `k` in nats.
    pub fn rate(&self, sample: &ChannelSample, p: &[f64], k: usize) -> f64 {
        let (total, interference) = self.received_powers(sample, p, k);
        total.ln() - interference.ln()
    }

    /// Instantaneous sum rate over all users.
    pub fn sum_rate(&self, sample: &ChannelSample, p: &[f64]) -> f64 {
        (0..self.users()).map(|k| self.rate(sample, p, k)).sum()
    }

    /// Rate of user `k` when every interferer transmits at its power cap:
    /// a lower bound on [`Self::rate`] that depends on `p_k` alone.
    pub fn worst_case_rate(&self, sample: &ChannelSample, p_k: f64, k: usize) -> f64 {
        let d = self.worst_case_interference(sample, k);
        (sample.gains[k][k] * p_k + d).ln() - d.ln()
    }

    /// Interference-plus-noise power at receiver `k` under full-power
    /// interferers: `noise_k + sum_{j != k} h[k][j] P_j`.
    fn worst_case_interference(&self, sample: &ChannelSample, k: usize) -> f64 {
        let row = &sample.gains[k];
        let mut d = self.noise_vars[k];
        for j in 0..self.users() {
            if j != k {
                d += row[j] * self.power_limits[j];
            }
        }
        d
    }

    /// Gradient of the negated sum rate `-sum_m r_m(p, h)` in `p`.
    pub fn neg_sum_rate_gradient(&self, sample: &ChannelSample, p: &[f64]) -> Vec<f64> {
        let users = self.users();
        let mut grad = vec![0.0; users];
        for m in 0..users {
            let (total, interference) = self.received_powers(sample, p, m);
            let row = &sample.gains[m];
            for j in 0..users {
                grad[j] -= row[j] / total;
                if j != m {
                    grad[j] += row[j] / interference;
                }
            }
        }
        grad
    }

    /// Gradient of the rate shortfall `req_k - r_k(p, h)` in `p`.
    pub fn rate_shortfall_gradient(&self, sample: &ChannelSample, p: &[f64], k: usize) -> Vec<f64> {
        let (total, interference) = self.received_powers(sample, p, k);
        let row = &sample.gains[k];
        let mut grad = vec![0.0; self.users()];
        for j in 0..self.users() {
            grad[j] = -row[j] / total;
            if j != k {
                grad[j] += row[j] / interference;
            }
        }
        grad
    }

    /// Monte Carlo estimate of the expected rate of user `k` at `p`.
    pub fn ergodic_rate(&self, p: &[f64], k: usize, samples: usize, seed: u64) -> Estimate {
        let mut rng = estimate_rng(seed);
        Estimate::from_values(
            (0..samples).map(|_| self.rate(&self.sample_channels(&mut rng), p, k)),
        )
    }

    /// Monte Carlo estimate of the expected sum rate at `p`.
    pub fn ergodic_sum_rate(&self, p: &[f64], samples: usize, seed: u64) -> Estimate {
        let mut rng = estimate_rng(seed);
        Estimate::from_values(
            (0..samples).map(|_| self.sum_rate(&self.sample_channels(&mut rng), p)),
        )
    }

    /// Monte Carlo estimate of the expected worst-case rate of user `k`.
    pub fn ergodic_worst_case_rate(
        &self,
        p_k: f64,
        k: usize,
        samples: usize,
        seed: u64,
    ) -> Estimate {
        let mut rng = estimate_rng(seed);
        Estimate::from_values(
            (0..samples).map(|_| self.worst_case_rate(&self.sample_channels(&mut rng), p_k, k)),
        )
    }
}

/// One realization of all link gains; `gains[k][j]` is transmitter `j`
/// into receiver `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSample {
    pub gains: Vec<Vec<f64>>,
}

/// Convex function `sum_r -ln(offsets[r] + gains[r] . x) + linear . x + c`.
///
/// Every surrogate in this module has this shape. Convexity needs each
/// log argument positive over the feasible box, which holds here because
/// offsets are bounded below by a noise variance and all gains and powers
/// are nonnegative.
#[derive(Clone, Debug)]
pub struct NegLogAffine {
    gains: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl NegLogAffine {
    pub fn new(gains: Vec<Vec<f64>>, offsets: Vec<f64>, linear: Vec<f64>, constant: f64) -> Self {
        debug_assert_eq!(gains.len(), offsets.len());
        debug_assert!(gains.iter().all(|row| row.len() == linear.len()));
        NegLogAffine {
            gains,
            offsets,
            linear,
            constant,
        }
    }
}

impl SurrogateComponent for NegLogAffine {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (row, &offset) in self.gains.iter().zip(self.offsets.iter()) {
            let mut s = offset;
            for j in 0..x.len() {
                s += row[j] * x[j];
            }
            v -= s.ln();
        }
        for j in 0..x.len() {
            v += self.linear[j] * x[j];
        }
        v
    }

    fn add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) {
        for (row, &offset) in self.gains.iter().zip(self.offsets.iter()) {
            let mut s = offset;
            for j in 0..x.len() {
                s += row[j] * x[j];
            }
            let coef = scale / s;
            for j in 0..x.len() {
                acc[j] -= coef * row[j];
            }
        }
        for j in 0..x.len() {
            acc[j] += scale * self.linear[j];
        }
    }

    fn value_and_add_scaled_gradient(&self, x: &[f64], scale: f64, acc: &mut [f64]) -> f64 {
        let mut v = self.constant;
        for (row, &offset) in self.gains.iter().zip(self.offsets.iter()) {
            let mut s = offset;
            for j in 0..x.len() {
                s += row[j] * x[j];
            }
            v -= s.ln();
            let coef = scale / s;
            for j in 0..x.len() {
                acc[j] -= coef * row[j];
            }
        }
        for j in 0..x.len() {
            v += self.linear[j] * x[j];
            acc[j] += scale * self.linear[j];
        }
        v
    }
}

/// Interference-plus-noise power at receiver `k` evaluated at the anchor.
fn anchor_interference(model: &NetworkModel, sample: &ChannelSample, anchor: &[f64], k: usize) -> f64 {
    let row = &sample.gains[k];
    let mut v = model.noise_vars[k];
    for j in 0..anchor.len() {
        if j != k {
            v += row[j] * anchor[j];
        }
    }
    v
}

/// Convex surrogate of the negated sum rate `-sum_k r_k(., h)` around
/// `anchor`: the convex `-ln(total_k)` terms are kept exactly, the concave
/// `+ln(interference_k)` terms are linearized.
pub fn coupled_objective_surrogate(
    model: &NetworkModel,
    anchor: &[f64],
    sample: &ChannelSample,
) -> ConvexComponent {
    let users = model.users();
    let mut linear = vec![0.0; users];
    let mut constant = 0.0;
    for k in 0..users {
        let interference = anchor_interference(model, sample, anchor, k);
        constant += interference.ln();
        let row = &sample.gains[k];
        for j in 0..users {
            if j != k {
                let c = row[j] / interference;
                linear[j] += c;
                constant -= c * anchor[j];
            }
        }
    }
    ConvexComponent::new(
        users,
        NegLogAffine::new(
            sample.gains.clone(),
            model.noise_vars.clone(),
            linear,
            constant,
        ),
    )
}

/// Convex surrogate of the rate shortfall `req_k - r_k(., h)` around
/// `anchor` (same construction as the objective, one user's terms only).
pub fn coupled_rate_surrogate(
    model: &NetworkModel,
    k: usize,
    anchor: &[f64],
    sample: &ChannelSample,
) -> ConvexComponent {
    let users = model.users();
    let interference = anchor_interference(model, sample, anchor, k);
    let row = &sample.gains[k];
    let mut linear = vec![0.0; users];
    let mut constant = model.rate_reqs[k] + interference.ln();
    for j in 0..users {
        if j != k {
            let c = row[j] / interference;
            linear[j] = c;
            constant -= c * anchor[j];
        }
    }
    ConvexComponent::new(
        users,
        NegLogAffine::new(
            vec![row.clone()],
            vec![model.noise_vars[k]],
            linear,
            constant,
        ),
    )
}

/// Scalar surrogate of the negated sum rate as a function of `p_k` alone,
/// all other powers frozen at the anchor. Each `-ln(total_m)` keeps its
/// exact dependence on `p_k`; the `+ln(interference_m)` terms of the other
/// users are linearized in `p_k` (user `k`'s own interference does not
/// involve `p_k`).
pub fn block_objective_surrogate(
    model: &NetworkModel,
    k: usize,
    anchor: &[f64],
    sample: &ChannelSample,
) -> ConvexComponent {
    let users = model.users();
    let mut gains = Vec::with_capacity(users);
    let mut offsets = Vec::with_capacity(users);
    let mut slope = 0.0;
    let mut constant = 0.0;
    for m in 0..users {
        let row = &sample.gains[m];
        let mut frozen = model.noise_vars[m];
        for j in 0..users {
            if j != k {
                frozen += row[j] * anchor[j];
            }
        }
        gains.push(vec![row[k]]);
        offsets.push(frozen);
        let interference = anchor_interference(model, sample, anchor, m);
        constant += interference.ln();
        if m != k {
            slope += row[k] / interference;
        }
    }
    constant -= slope * anchor[k];
    ConvexComponent::new(1, NegLogAffine::new(gains, offsets, vec![slope], constant))
}

/// Scalar surrogate of the worst-case rate shortfall
/// `req_k - worst_case_rate(p_k, h)`. Already convex in `p_k`, so the
/// sampled function is its own surrogate — no linearization, hence no
/// anchor.
pub fn block_rate_surrogate(
    model: &NetworkModel,
    k: usize,
    sample: &ChannelSample,
) -> ConvexComponent {
    let d = {
        let row = &sample.gains[k];
        let mut d = model.noise_vars[k];
        for j in 0..model.users() {
            if j != k {
                d += row[j] * model.power_limits[j];
            }
        }
        d
    };
    ConvexComponent::new(
        1,
        NegLogAffine::new(
            vec![vec![sample.gains[k][k]]],
            vec![d],
            vec![0.0],
            model.rate_reqs[k] + d.ln(),
        ),
    )
}

/// The coupled formulation: minimize `-E[sum rate]` subject to
/// `E[r_k] >= req_k` for every user, powers in `[0, P]`, starting from
/// full power.
pub fn coupled_problem(model: &NetworkModel) -> Result<StochasticProblem<ChannelSample>> {
    model.validate()?;
    let model = Arc::new(model.clone());
    let users = model.users();
    let set = FeasibleSet::bounded_box(vec![0.0; users], model.power_limits.clone())?;

    let mut builder = StochasticProblem::builder(set, {
        let m = model.clone();
        move |rng| m.sample_channels(rng)
    })
    .objective(
        {
            let m = model.clone();
            move |p, h| -m.sum_rate(h, p)
        },
        {
            let m = model.clone();
            move |p, h| m.neg_sum_rate_gradient(h, p)
        },
        {
            let m = model.clone();
            move |anchor, h| coupled_objective_surrogate(&m, anchor, h)
        },
    )
    .initial_point(model.power_limits.clone());

    for k in 0..users {
        builder = builder.constraint(
            {
                let m = model.clone();
                move |p, h| m.rate_reqs[k] - m.rate(h, p, k)
            },
            {
                let m = model.clone();
                move |p, h| m.rate_shortfall_gradient(h, p, k)
            },
            {
                let m = model.clone();
                move |anchor, h| coupled_rate_surrogate(&m, k, anchor, h)
            },
        );
    }
    builder.build()
}

/// The separable formulation: same objective, but each rate floor is
/// replaced by its worst-case (full-power interference) bound, which
/// depends on that user's power alone. One scalar block per user,
/// starting from full power.
pub fn decoupled_problem(model: &NetworkModel) -> Result<StochasticProblem<ChannelSample>> {
    model.validate()?;
    let model = Arc::new(model.clone());
    let users = model.users();
    let set = FeasibleSet::bounded_box(vec![0.0; users], model.power_limits.clone())?;

    let mut builder = StochasticProblem::builder(set, {
        let m = model.clone();
        move |rng| m.sample_channels(rng)
    })
    .objective(
        {
            let m = model.clone();
            move |p, h| -m.sum_rate(h, p)
        },
        {
            let m = model.clone();
            move |p, h| m.neg_sum_rate_gradient(h, p)
        },
        {
            let m = model.clone();
            move |anchor, h| coupled_objective_surrogate(&m, anchor, h)
        },
    )
    .blocks((0..users).map(|k| k..k + 1).collect())
    .initial_point(model.power_limits.clone());

    for k in 0..users {
        builder = builder
            .block_objective(k, 1, {
                let m = model.clone();
                move |anchor, h| block_objective_surrogate(&m, k, anchor, h)
            })
            .block_constraint(
                k,
                1,
                {
                    let m = model.clone();
                    move |p_k: &[f64], h: &ChannelSample| {
                        m.rate_reqs[k] - m.worst_case_rate(h, p_k[0], k)
                    }
                },
                {
                    let m = model.clone();
                    move |p_k: &[f64], h: &ChannelSample| {
                        let d = {
                            let row = &h.gains[k];
                            let mut d = m.noise_vars[k];
                            for j in 0..m.users() {
                                if j != k {
                                    d += row[j] * m.power_limits[j];
                                }
                            }
                            d
                        };
                        vec![-h.gains[k][k] / (h.gains[k][k] * p_k[0] + d)]
                    }
                },
                {
                    let m = model.clone();
                    move |_anchor, h| block_rate_surrogate(&m, k, h)
                },
            );
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{central_difference_gradient, midpoint_convexity_violation};
    use rand_chacha::rand_core::SeedableRng;

    fn random_power(model: &NetworkModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
        model
            .power_limits
            .iter()
            .map(|&cap| rng.random::<f64>() * cap)
            .collect()
    }

    #[test]
    fn five_user_network_validates() {
        let m = NetworkModel::five_user();
        assert_eq!(m.users(), 5);
        assert!(m.validate().is_ok());
        assert_eq!(m.gain_means[2][2], 1.0);
        assert_eq!(m.gain_means[2][3], 0.1);
    }

    #[test]
    fn validation_names_field_and_index() {
        let mut m = NetworkModel::five_user();
        m.noise_vars[2] = -1.0;
        assert_eq!(
            m.validate().unwrap_err(),
            Error::InvalidModel {
                field: "noise_vars",
                index: 2
            }
        );
        let mut m = NetworkModel::five_user();
        m.gain_means[1][3] = 0.0;
        assert_eq!(
            m.validate().unwrap_err(),
            Error::InvalidModel {
                field: "gain_means",
                index: 1 * 5 + 3
            }
        );
        let mut m = NetworkModel::five_user();
        m.rate_reqs.pop();
        assert!(matches!(
            m.validate().unwrap_err(),
            Error::DimensionMismatch { expected: 5, got: 4 }
        ));
    }

    #[test]
    fn channel_gains_have_the_configured_means() {
        let m = NetworkModel::symmetric(2, 1.0, 1.0, 0.0, 2.0, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut direct = 0.0;
        let mut cross = 0.0;
        for _ in 0..n {
            let h = m.sample_channels(&mut rng);
            direct += h.gains[0][0];
            cross += h.gains[0][1];
            assert!(h.gains.iter().flatten().all(|&g| g >= 0.0));
        }
        // Std error of the means: 2/sqrt(n) ~ 0.006 and 0.25/sqrt(n) ~ 0.0008.
        assert!((direct / n as f64 - 2.0).abs() < 0.03);
        assert!((cross / n as f64 - 0.25).abs() < 0.004);
    }

    #[test]
    fn single_user_rate_matches_the_closed_form() {
        let m = NetworkModel::symmetric(1, 10.0, 2.0, 0.0, 1.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = m.sample_channels(&mut rng);
            let p = [rng.random::<f64>() * 10.0];
            let expected = (1.0 + h.gains[0][0] * p[0] / 2.0).ln();
            assert!((m.rate(&h, &p, 0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_case_rate_lower_bounds_the_rate() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let h = m.sample_channels(&mut rng);
            let p = random_power(&m, &mut rng);
            for k in 0..5 {
                assert!(m.worst_case_rate(&h, p[k], k) <= m.rate(&h, &p, k) + 1e-12);
            }
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let h = m.sample_channels(&mut rng);
            let p = random_power(&m, &mut rng);
            let g = m.neg_sum_rate_gradient(&h, &p);
            let fd = central_difference_gradient(|y| -m.sum_rate(&h, y), &p, 1e-6);
            for j in 0..5 {
                assert!((g[j] - fd[j]).abs() <= 1e-6 * (1.0 + g[j].abs()), "{g:?} vs {fd:?}");
            }
            for k in 0..5 {
                let g = m.rate_shortfall_gradient(&h, &p, k);
                let fd =
                    central_difference_gradient(|y| m.rate_reqs[k] - m.rate(&h, y, k), &p, 1e-6);
                for j in 0..5 {
                    assert!((g[j] - fd[j]).abs() <= 1e-6 * (1.0 + g[j].abs()));
                }
            }
        }
    }

    #[test]
    fn coupled_surrogates_touch_value_and_gradient_at_the_anchor() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let h = m.sample_channels(&mut rng);
            let anchor = random_power(&m, &mut rng);

            let c = coupled_objective_surrogate(&m, &anchor, &h);
            assert!(
                (c.value(&anchor) - (-m.sum_rate(&h, &anchor))).abs()
                    <= 1e-10 * (1.0 + m.sum_rate(&h, &anchor).abs())
            );
            let g = c.gradient(&anchor);
            let expected = m.neg_sum_rate_gradient(&h, &anchor);
            for j in 0..5 {
                assert!((g[j] - expected[j]).abs() <= 1e-12 * (1.0 + expected[j].abs()));
            }

            for k in 0..5 {
                let c = coupled_rate_surrogate(&m, k, &anchor, &h);
                let want = m.rate_reqs[k] - m.rate(&h, &anchor, k);
                assert!((c.value(&anchor) - want).abs() <= 1e-10 * (1.0 + want.abs()));
                let g = c.gradient(&anchor);
                let expected = m.rate_shortfall_gradient(&h, &anchor, k);
                for j in 0..5 {
                    assert!((g[j] - expected[j]).abs() <= 1e-12 * (1.0 + expected[j].abs()));
                }
            }
        }
    }

    #[test]
    fn block_surrogates_touch_value_and_gradient_at_the_anchor() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let h = m.sample_channels(&mut rng);
            let anchor = random_power(&m, &mut rng);
            for k in 0..5 {
                let c = block_objective_surrogate(&m, k, &anchor, &h);
                let at = [anchor[k]];
                let want = -m.sum_rate(&h, &anchor);
                assert!((c.value(&at) - want).abs() <= 1e-10 * (1.0 + want.abs()));
                // Partial derivative in p_k of the full negated sum rate.
                let expected = m.neg_sum_rate_gradient(&h, &anchor)[k];
                let g = c.gradient(&at)[0];
                assert!((g - expected).abs() <= 1e-12 * (1.0 + expected.abs()));

                let c = block_rate_surrogate(&m, k, &h);
                let want = m.rate_reqs[k] - m.worst_case_rate(&h, anchor[k], k);
                assert!((c.value(&at) - want).abs() <= 1e-10 * (1.0 + want.abs()));
                let fd = central_difference_gradient(
                    |y| m.rate_reqs[k] - m.worst_case_rate(&h, y[0], k),
                    &at,
                    1e-6,
                );
                assert!((c.gradient(&at)[0] - fd[0]).abs() <= 1e-6 * (1.0 + fd[0].abs()));
            }
        }
    }

    #[test]
    fn surrogates_are_convex_along_random_segments() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let h = m.sample_channels(&mut rng);
            let anchor = random_power(&m, &mut rng);
            let a = random_power(&m, &mut rng);
            let b = random_power(&m, &mut rng);
            let c = coupled_objective_surrogate(&m, &anchor, &h);
            assert!(midpoint_convexity_violation(|y| c.value(y), &a, &b) <= 1e-10);
            for k in 0..5 {
                let c = coupled_rate_surrogate(&m, k, &anchor, &h);
                assert!(midpoint_convexity_violation(|y| c.value(y), &a, &b) <= 1e-10);
                let c = block_objective_surrogate(&m, k, &anchor, &h);
                assert!(
                    midpoint_convexity_violation(|y| c.value(y), &a[k..k + 1], &b[k..k + 1])
                        <= 1e-10
                );
            }
        }
    }

    #[test]
    fn problem_builders_assemble_the_advertised_shapes() {
        let m = NetworkModel::five_user();
        let coupled = coupled_problem(&m).unwrap();
        assert_eq!(coupled.dimension(), 5);
        assert_eq!(coupled.constraint_count(), 5);
        assert!(coupled.blocks().is_none());
        assert_eq!(coupled.initial_point().unwrap(), vec![100.0; 5]);

        let decoupled = decoupled_problem(&m).unwrap();
        assert_eq!(decoupled.dimension(), 5);
        let blocks = decoupled.blocks().unwrap();
        assert_eq!(blocks.block_count(), 5);
        for k in 0..5 {
            assert_eq!(blocks.constraint_count(k), 1);
        }
        assert_eq!(decoupled.initial_point().unwrap(), vec![100.0; 5]);
    }

    #[test]
    fn fused_component_path_matches_the_split_path() {
        let m = NetworkModel::five_user();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let h = m.sample_channels(&mut rng);
        let anchor = random_power(&m, &mut rng);
        let c = coupled_objective_surrogate(&m, &anchor, &h);
        let x = random_power(&m, &mut rng);
        let mut acc1 = vec![0.0; 5];
        let v1 = c.value_and_add_scaled_gradient(&x, 0.7, &mut acc1);
        let mut acc2 = vec![0.0; 5];
        let v2 = c.value(&x);
        c.add_scaled_gradient(&x, 0.7, &mut acc2);
        assert_eq!(v1, v2);
        assert_eq!(acc1, acc2);
    }
}
