use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MotionLimits, Workspace};

/// Uniform binning of `(d, e, v, omega)` into a flat state index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizerSpec {
    pub n_d: usize,
    pub n_theta: usize,
    pub n_v: usize,
    pub n_omega: usize,
    pub d_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

/// Binned planner state. `flat` is the row-major flattening of the four
/// indices `(i_d, i_e, i_v, i_omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiscreteState {
    pub i_d: usize,
    pub i_e: usize,
    pub i_v: usize,
    pub i_omega: usize,
    pub flat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Distance,
    Heading,
    Speed,
    TurnRate,
}

impl DiscretizerSpec {
    /// Distance range is the workspace diagonal, split into bins of
    /// `distance_resolution` metres.
    pub fn from_workspace(
        ws: &Workspace,
        limits: &MotionLimits,
        distance_resolution: f64,
        n_theta: usize,
        n_v: usize,
        n_omega: usize,
    ) -> Result<Self> {
        if !(distance_resolution > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "distance resolution {distance_resolution} must be > 0"
            )));
        }
        let d_max = ws.diagonal();
        let n_d = ((d_max / distance_resolution).ceil() as usize).max(2);
        let spec = Self {
            n_d,
            n_theta,
            n_v,
            n_omega,
            d_max,
            v_min: limits.v_min,
            v_max: limits.v_max,
            omega_min: limits.omega_min,
            omega_max: limits.omega_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_d < 2 || self.n_theta < 2 || self.n_v < 2 || self.n_omega < 2 {
            return Err(Error::InvalidConfig(format!(
                "every dimension needs at least 2 bins, got {}x{}x{}x{}",
                self.n_d, self.n_theta, self.n_v, self.n_omega
            )));
        }
        if !(self.d_max > 0.0) || !(self.v_min < self.v_max) || !(self.omega_min < self.omega_max) {
            return Err(Error::InvalidConfig("degenerate discretizer range".into()));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_d * self.n_theta * self.n_v * self.n_omega
    }

    fn range(&self, dim: Dim) -> (f64, f64, usize) {
        match dim {
            Dim::Distance => (0.0, self.d_max, self.n_d),
            Dim::Heading => (-PI, PI, self.n_theta),
            Dim::Speed => (self.v_min, self.v_max, self.n_v),
            Dim::TurnRate => (self.omega_min, self.omega_max, self.n_omega),
        }
    }

    /// Bin index along one dimension; out-of-range values land in the edge bins.
    pub fn bin(&self, dim: Dim, value: f64) -> usize {
        let (lo, hi, n) = self.range(dim);
        let f = (value - lo) / (hi - lo) * n as f64;
        if f.is_nan() || f <= 0.0 {
            0
        } else {
            (f as usize).min(n - 1)
        }
    }

    pub fn bin_center(&self, dim: Dim, index: usize) -> f64 {
        let (lo, hi, n) = self.range(dim);
        lo + (index as f64 + 0.5) * (hi - lo) / n as f64
    }

    pub fn discretize(&self, d: f64, e: f64, v: f64, omega: f64) -> DiscreteState {
        let i_d = self.bin(Dim::Distance, d);
        let i_e = self.bin(Dim::Heading, e);
        let i_v = self.bin(Dim::Speed, v);
        let i_omega = self.bin(Dim::TurnRate, omega);
        DiscreteState {
            i_d,
            i_e,
            i_v,
            i_omega,
            flat: self.flatten(i_d, i_e, i_v, i_omega),
        }
    }

    pub fn flatten(&self, i_d: usize, i_e: usize, i_v: usize, i_omega: usize) -> usize {
        ((i_d * self.n_theta + i_e) * self.n_v + i_v) * self.n_omega + i_omega
    }

    pub fn unflatten(&self, flat: usize) -> Result<DiscreteState> {
        if flat >= self.n_states() {
            return Err(Error::Contract(format!(
                "state index {flat} out of range 0..{}",
                self.n_states()
            )));
        }
        let i_omega = flat % self.n_omega;
        let rest = flat / self.n_omega;
        let i_v = rest % self.n_v;
        let rest = rest / self.n_v;
        let i_e = rest % self.n_theta;
        let i_d = rest / self.n_theta;
        Ok(DiscreteState {
            i_d,
            i_e,
            i_v,
            i_omega,
            flat,
        })
    }
}
