//! Task reward and the twelve shaping terms.

use serde::{Deserialize, Serialize};

use crate::geometry::MotionLimits;

/// Turn rates below this magnitude count as zero when detecting sign flips.
const OMEGA_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalCause {
    Goal,
    Timeout,
    OutOfWorkspace,
}

/// Reward gains, deadbands and lock windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub k_d: f64,
    pub k_theta: f64,
    pub k_v: f64,
    pub k_lat: f64,
    pub k_omega: f64,
    pub k_av: f64,
    pub k_aomega: f64,
    pub k_step: f64,
    pub k_timeout: f64,
    pub k_ws: f64,
    pub k_wflip: f64,
    pub k_head_inc: f64,
    pub k_head_stall: f64,
    pub delta_e_head: f64,
    pub k_wstop: f64,
    pub e_pad: f64,
    pub k_wsign: f64,
    /// Heading deadband, rad.
    pub e_db: f64,
    /// Turn-rate deadband, rad/s.
    pub omega_db: f64,
    /// Zero-lock heading window, rad.
    pub e_lock: f64,
    /// Zero-lock distance window, m.
    pub d_lock: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            k_d: 5.0,
            k_theta: 6.0,
            k_v: 0.08,
            k_lat: 0.9,
            k_omega: 0.28,
            k_av: 0.10,
            k_aomega: 0.10,
            k_step: 0.04,
            k_timeout: 3.0,
            k_ws: 1.2,
            k_wflip: 0.85,
            k_head_inc: 0.25,
            k_head_stall: 0.03,
            delta_e_head: 0.02,
            k_wstop: 1.5,
            e_pad: 0.01,
            k_wsign: 0.8,
            e_db: 0.01,
            omega_db: 0.001,
            e_lock: 0.03,
            d_lock: 0.30,
        }
    }
}

impl RewardWeights {
    /// Weights with every shaping gain zeroed; only the step cost remains.
    pub fn step_cost_only(k_step: f64) -> Self {
        Self {
            k_d: 0.0,
            k_theta: 0.0,
            k_v: 0.0,
            k_lat: 0.0,
            k_omega: 0.0,
            k_av: 0.0,
            k_aomega: 0.0,
            k_step,
            k_timeout: 0.0,
            k_ws: 0.0,
            k_wflip: 0.0,
            k_head_inc: 0.0,
            k_head_stall: 0.0,
            k_wstop: 0.0,
            k_wsign: 0.0,
            ..Self::default()
        }
    }

    pub fn all_non_negative(&self) -> bool {
        [
            self.k_d,
            self.k_theta,
            self.k_v,
            self.k_lat,
            self.k_omega,
            self.k_av,
            self.k_aomega,
            self.k_step,
            self.k_timeout,
            self.k_ws,
            self.k_wflip,
            self.k_head_inc,
            self.k_head_stall,
            self.delta_e_head,
            self.k_wstop,
            self.e_pad,
            self.k_wsign,
            self.e_db,
            self.omega_db,
            self.e_lock,
            self.d_lock,
        ]
        .iter()
        .all(|&k| k >= 0.0)
    }
}

/// Continuous quantities of one transition needed by the shaping terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Transition {
    pub d_t: f64,
    pub d_next: f64,
    pub e_t: f64,
    pub e_next: f64,
    pub v_next: f64,
    pub omega_t: f64,
    pub omega_next: f64,
    pub a_v: f64,
    pub a_omega: f64,
    /// Sign of the heading error at episode start.
    pub sign_e0: f64,
    pub goal_tol: f64,
}

/// The individual shaping contributions, in the order they are itemized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShapeTerms {
    pub heading: f64,
    pub turn_rate: f64,
    pub speed_along: f64,
    pub speed_lateral: f64,
    pub accel: f64,
    pub hysteresis: f64,
    pub goal: f64,
    pub flip: f64,
    pub heading_increase: f64,
    pub stall: f64,
    pub stop: f64,
    pub sign: f64,
}

impl ShapeTerms {
    pub fn total(&self) -> f64 {
        self.heading
            + self.turn_rate
            + self.speed_along
            + self.speed_lateral
            + self.accel
            + self.hysteresis
            + self.goal
            + self.flip
            + self.heading_increase
            + self.stall
            + self.stop
            + self.sign
    }
}

/// Step cost plus distance progress, with the timeout penalty on timeout.
pub fn task_reward(d_t: f64, d_next: f64, cause: Option<TerminalCause>, d_final: f64, w: &RewardWeights) -> f64 {
    let mut r = -w.k_step + w.k_d * (d_t - d_next);
    if cause == Some(TerminalCause::Timeout) {
        r -= w.k_timeout * d_final;
    }
    r
}

/// Shaping potential over distance and heading error.
pub fn potential(d: f64, e: f64, w: &RewardWeights) -> f64 {
    w.k_d * d + w.k_theta * e.abs()
}

fn sign_of(x: f64) -> f64 {
    if x.abs() <= OMEGA_ZERO {
        0.0
    } else {
        x.signum()
    }
}

pub fn shape_terms(tr: &Transition, w: &RewardWeights, limits: &MotionLimits) -> ShapeTerms {
    let abs_e = tr.e_t.abs();
    let abs_en = tr.e_next.abs();
    let align = 0.5 * (1.0 + abs_en.cos());
    let cos_en = tr.e_next.cos();
    let sin_en = tr.e_next.sin();
    let delta_e = abs_en - abs_e;

    let hysteresis = if abs_en < w.e_db {
        let excess = (tr.omega_next.abs() - w.omega_db).max(0.0);
        -w.k_ws * excess * excess
    } else {
        0.0
    };
    let goal = if tr.d_next <= tr.goal_tol { w.k_d * tr.d_t } else { 0.0 };
    let flip = if sign_of(tr.omega_t) * sign_of(tr.omega_next) < 0.0 {
        -w.k_wflip
    } else {
        0.0
    };
    let stall = if delta_e.abs() < w.delta_e_head {
        -w.k_head_stall * abs_en
    } else {
        0.0
    };
    let theta_stop = tr.omega_next * tr.omega_next / (2.0 * limits.angular_brake());
    let excess = (theta_stop - (abs_en + w.e_pad)).max(0.0);
    let wrong = (-tr.sign_e0 * tr.omega_next - w.omega_db).max(0.0);
    let sign = if wrong > 0.0 { -w.k_wsign * wrong * wrong } else { 0.0 };

    ShapeTerms {
        heading: w.k_theta * (abs_e - abs_en),
        turn_rate: -w.k_omega * align * tr.omega_next * tr.omega_next,
        speed_along: w.k_v * tr.v_next * cos_en.max(0.0).powi(2),
        speed_lateral: -w.k_lat * tr.v_next * tr.v_next * sin_en * sin_en,
        accel: -w.k_av * tr.a_v * tr.a_v - w.k_aomega * (0.5 + 0.5 * align) * tr.a_omega * tr.a_omega,
        hysteresis,
        goal,
        flip,
        heading_increase: -w.k_head_inc * delta_e.max(0.0),
        stall,
        stop: -w.k_wstop * excess * excess,
        sign,
    }
}

pub fn shape_reward(tr: &Transition, w: &RewardWeights, limits: &MotionLimits) -> f64 {
    shape_terms(tr, w, limits).total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn task_reward_examples() {
        let w = RewardWeights::default();
        assert_eq!(task_reward(1.0, 1.0, None, 0.0, &w), -0.04);
        assert_relative_eq!(task_reward(2.0, 1.0, None, 0.0, &w), 4.96, epsilon = 1e-12);
        let timeout = task_reward(3.0, 3.0, Some(TerminalCause::Timeout), 3.0, &w);
        assert_relative_eq!(timeout - task_reward(3.0, 3.0, None, 3.0, &w), -9.0, epsilon = 1e-12);
    }

    #[test]
    fn everything_vanishes_at_rest_and_aligned() {
        let tr = Transition {
            d_t: 5.0,
            d_next: 5.0,
            sign_e0: 1.0,
            goal_tol: 0.1,
            ..Transition::default()
        };
        assert_eq!(
            shape_reward(&tr, &RewardWeights::default(), &MotionLimits::default()),
            0.0
        );
    }

    #[test]
    fn hysteresis_example() {
        let tr = Transition {
            d_t: 5.0,
            d_next: 5.0,
            e_t: 0.005,
            e_next: 0.005,
            omega_t: 0.01,
            omega_next: 0.01,
            sign_e0: 1.0,
            goal_tol: 0.1,
            ..Transition::default()
        };
        let terms = shape_terms(&tr, &RewardWeights::default(), &MotionLimits::default());
        assert_relative_eq!(terms.hysteresis, -9.72e-5, epsilon = 1e-15);
    }

    #[test]
    fn goal_bonus_scales_with_previous_distance() {
        let tr = Transition {
            d_t: 0.12,
            d_next: 0.09,
            goal_tol: 0.1,
            ..Transition::default()
        };
        let terms = shape_terms(&tr, &RewardWeights::default(), &MotionLimits::default());
        assert_relative_eq!(terms.goal, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn flip_and_wrong_sign() {
        let w = RewardWeights::default();
        let limits = MotionLimits::default();
        let tr = Transition {
            d_t: 5.0,
            d_next: 5.0,
            e_t: 0.5,
            e_next: 0.5,
            omega_t: 0.002,
            omega_next: -0.003,
            sign_e0: 1.0,
            goal_tol: 0.1,
            ..Transition::default()
        };
        let terms = shape_terms(&tr, &w, &limits);
        assert_eq!(terms.flip, -0.85);
        assert_relative_eq!(terms.sign, -0.8 * 0.002f64.powi(2), epsilon = 1e-15);

        // rounding residue around zero is not a flip
        let tr = Transition {
            omega_t: 1e-18,
            omega_next: -1e-18,
            ..tr
        };
        assert_eq!(shape_terms(&tr, &w, &limits).flip, 0.0);
    }

    #[test]
    fn stop_penalty_uses_braking_distance() {
        let w = RewardWeights::default();
        let limits = MotionLimits::default();
        let tr = Transition {
            d_t: 5.0,
            d_next: 5.0,
            e_t: 0.1,
            e_next: 0.1,
            omega_t: 0.1,
            omega_next: 0.1,
            sign_e0: 1.0,
            goal_tol: 0.1,
            ..Transition::default()
        };
        // theta_stop = 0.01 / 0.04 = 0.25, excess = 0.25 - 0.11 = 0.14
        let terms = shape_terms(&tr, &w, &limits);
        assert_relative_eq!(terms.stop, -1.5 * 0.14f64.powi(2), epsilon = 1e-12);
    }

    #[test]
    fn accel_angular_factor_range() {
        let w = RewardWeights::default();
        let limits = MotionLimits::default();
        let base = Transition {
            a_omega: 0.02,
            d_t: 5.0,
            d_next: 5.0,
            goal_tol: 0.1,
            ..Transition::default()
        };
        let aligned = shape_terms(&base, &w, &limits).accel;
        let opposite = shape_terms(
            &Transition {
                e_next: std::f64::consts::PI - 1e-9,
                ..base
            },
            &w,
            &limits,
        )
        .accel;
        assert_relative_eq!(aligned, -0.1 * 0.0004, epsilon = 1e-15);
        assert_relative_eq!(opposite, -0.1 * 0.5 * 0.0004, epsilon = 1e-12);
    }
}
