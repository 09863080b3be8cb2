//! Diminishing stepsize schedules.
//!
//! Both averaging weights used by the outer loop — the surrogate forgetting
//! factor and the iterate averaging stepsize — decay as power laws
//! `scale * (t + offset)^(-exponent)`. The admissible exponent range
//! (1/2, 1] is exactly the window in which a power law is non-summable
//! while its square is summable, which is what the convergence theory
//! requires; validation enforces it symbolically rather than numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated power-law schedule `t -> scale * (t + offset)^(-exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsizeSchedule {
    /// Decay exponent; must lie in (1/2, 1].
    pub exponent: f64,
    /// Positive multiplier; `scale * (1 + offset)^(-exponent)` must be <= 1
    /// so the sequence stays in (0, 1] from t = 1 on.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Nonnegative shift of the iteration counter.
    #[serde(default)]
    pub offset: u32,
}

fn default_scale() -> f64 {
    1.0
}

impl StepsizeSchedule {
    /// Builds and validates a schedule.
    pub fn power_law(exponent: f64, scale: f64, offset: u32) -> Result<Self> {
        let s = StepsizeSchedule {
            exponent,
            scale,
            offset,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks the admissibility conditions: positivity, decay to zero,
    /// divergent sum, convergent sum of squares, and range (0, 1].
    pub fn validate(&self) -> Result<()> {
        if !self.exponent.is_finite() || self.exponent <= 0.5 || self.exponent > 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "exponent must lie in (0.5, 1], got {}",
                self.exponent
            )));
        }
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        let first = self.scale * ((1 + self.offset) as f64).powf(-self.exponent);
        if first > 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "value at t = 1 is {first}, outside (0, 1]"
            )));
        }
        Ok(())
    }

    /// Schedule value at iteration `t` (1-based).
    pub fn value(&self, t: usize) -> Result<f64> {
        if t < 1 {
            return Err(Error::IterationOutOfRange(t));
        }
        Ok(self.scale * ((t as f64) + self.offset as f64).powf(-self.exponent))
    }

    /// Default surrogate forgetting factor: `t^(-0.6)`.
    pub fn default_forgetting() -> Self {
        StepsizeSchedule {
            exponent: 0.6,
            scale: 1.0,
            offset: 0,
        }
    }

    /// Default iterate averaging stepsize: `t^(-0.9)`.
    pub fn default_averaging() -> Self {
        StepsizeSchedule {
            exponent: 0.9,
            scale: 1.0,
            offset: 0,
        }
    }
}
