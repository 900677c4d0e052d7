//! Continuous robot state, goal geometry and the discrete-time unicycle model
//! shared by the planner's training environment and the closed-loop simulator.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-π, π)`.
pub fn wrap_pi(angle: f64) -> Result<f64> {
    if !angle.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap_pi_unchecked(angle))
}

/// [`wrap_pi`] without the finiteness check, for hot loops whose inputs are
/// finite by construction.
#[inline]
pub fn wrap_pi_unchecked(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let mut r = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid may round up to exactly TAU
    if r >= PI {
        r -= TAU;
    }
    r.max(-PI)
}

#[inline]
pub fn sat(value: f64, lo: f64, hi: f64) -> f64 {
    value.max(lo).min(hi)
}

/// Planar pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

/// Pose plus body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Heading in `[-π, π)`.
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl RobotState {
    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta,
            v: 0.0,
            omega: 0.0,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub x: f64,
    pub y: f64,
    /// Goal tolerance radius, m.
    pub tol: f64,
}

impl GoalSpec {
    pub fn new(x: f64, y: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidConfig(format!("goal ({x}, {y}) with tolerance {tol}")));
        }
        Ok(Self { x, y, tol })
    }
}

/// Axis-aligned rectangular workspace. The boundary counts as inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Workspace {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi && y_lo < y_hi) {
            return Err(Error::InvalidConfig(format!(
                "workspace [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] is empty"
            )));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    pub fn square(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_hi - self.x_lo).hypot(self.y_hi - self.y_lo)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_lo + self.x_hi), 0.5 * (self.y_lo + self.y_hi))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }
}

/// Speed, acceleration and timestep limits of the kinematic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub a_v_min: f64,
    pub a_v_max: f64,
    pub a_omega_min: f64,
    pub a_omega_max: f64,
    pub dt: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 0.25,
            omega_min: -0.15,
            omega_max: 0.15,
            a_v_min: -0.10,
            a_v_max: 0.10,
            a_omega_min: -0.02,
            a_omega_max: 0.02,
            dt: 0.05,
        }
    }
}

impl MotionLimits {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("v", self.v_min, self.v_max),
            ("omega", self.omega_min, self.omega_max),
            ("a_v", self.a_v_min, self.a_v_max),
            ("a_omega", self.a_omega_min, self.a_omega_max),
        ];
        for (name, lo, hi) in pairs {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} limits [{lo}, {hi}] are not increasing"
                )));
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt = {} must be > 0", self.dt)));
        }
        Ok(())
    }

    /// Largest available angular deceleration magnitude.
    pub fn angular_brake(&self) -> f64 {
        self.a_omega_min.abs().max(self.a_omega_max)
    }
}

/// Distance and wrapped heading error from `state` to `goal`.
pub fn goal_features(state: &RobotState, goal: &GoalSpec) -> (f64, f64) {
    features_to(state.x, state.y, state.theta, goal.x, goal.y)
}

#[inline]
pub fn features_to(x: f64, y: f64, theta: f64, gx: f64, gy: f64) -> (f64, f64) {
    let dx = gx - x;
    let dy = gy - y;
    let d = dx.hypot(dy);
    let e = wrap_pi_unchecked(dy.atan2(dx) - theta);
    (d, e)
}

/// One explicit step of the saturated unicycle: velocities first, then
/// position with the new speed and the old heading, then heading with the
/// new angular rate.
pub fn step_unicycle(state: &RobotState, a_v: f64, a_omega: f64, limits: &MotionLimits) -> RobotState {
    let dt = limits.dt;
    let v = sat(state.v + a_v * dt, limits.v_min, limits.v_max);
    let omega = sat(state.omega + a_omega * dt, limits.omega_min, limits.omega_max);
    advance_pose(state, v, omega, dt)
}

/// Advances the pose with already-chosen velocities `(v, omega)`, using the
/// same update order as [`step_unicycle`].
#[inline]
pub fn advance_pose(state: &RobotState, v: f64, omega: f64, dt: f64) -> RobotState {
    let (s, c) = state.theta.sin_cos();
    RobotState {
        x: state.x + v * c * dt,
        y: state.y + v * s * dt,
        theta: wrap_pi_unchecked(state.theta + omega * dt),
        v,
        omega,
    }
}

pub fn in_workspace(state: &RobotState, ws: &Workspace) -> bool {
    ws.contains(state.x, state.y)
}
