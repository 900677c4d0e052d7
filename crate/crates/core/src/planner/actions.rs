use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MotionLimits;

/// Acceleration pair applied for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub index: usize,
    pub a_v: f64,
    pub a_omega: f64,
}

/// Cartesian grid of linear and angular acceleration levels. Action `k` is
/// `(a_v[k / n_omega], a_omega[k % n_omega])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    pub a_v: Vec<f64>,
    pub a_omega: Vec<f64>,
}

fn levels(lo: f64, hi: f64, step: f64, name: &str) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo < hi) {
        return Err(Error::InvalidConfig(format!(
            "{name} grid [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize + 1;
    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            let a = lo + k as f64 * step;
            if a.abs() < 1e-12 * step.max(1.0) {
                0.0
            } else {
                a.min(hi)
            }
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = hi;
    }
    Ok(out)
}

impl ActionGrid {
    pub fn from_limits(limits: &MotionLimits, step_v: f64, step_omega: f64) -> Result<Self> {
        let grid = Self {
            a_v: levels(limits.a_v_min, limits.a_v_max, step_v, "a_v")?,
            a_omega: levels(limits.a_omega_min, limits.a_omega_max, step_omega, "a_omega")?,
        };
        grid.validate(limits)?;
        Ok(grid)
    }

    pub fn validate(&self, limits: &MotionLimits) -> Result<()> {
        let sorted = |xs: &[f64]| xs.windows(2).all(|w| w[0] < w[1]);
        if self.a_v.is_empty() || self.a_omega.is_empty() {
            return Err(Error::InvalidConfig("empty action grid".into()));
        }
        if !sorted(&self.a_v) || !sorted(&self.a_omega) {
            return Err(Error::InvalidConfig("action levels must be strictly increasing".into()));
        }
        let inside = |xs: &[f64], lo: f64, hi: f64| xs.iter().all(|&a| a >= lo && a <= hi);
        if !inside(&self.a_v, limits.a_v_min, limits.a_v_max)
            || !inside(&self.a_omega, limits.a_omega_min, limits.a_omega_max)
        {
            return Err(Error::InvalidConfig("action level outside acceleration limits".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.a_v.len() * self.a_omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn action(&self, index: usize) -> Action {
        let n = self.a_omega.len();
        Action {
            index,
            a_v: self.a_v[index / n],
            a_omega: self.a_omega[index % n],
        }
    }
}
