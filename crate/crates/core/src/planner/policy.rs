use rand::Rng;
use serde::{Deserialize, Serialize};

use super::actions::Action;
use super::qtable::QTable;
use super::reward::RewardWeights;
use crate::geometry::{sat, MotionLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Eval,
}

/// ε-greedy selection. With `eps == 0` no randomness is consumed.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, state: usize, eps: f64, rng: &mut R) -> usize {
    if eps > 0.0 && rng.random::<f64>() < eps {
        rng.random_range(0..q.n_actions())
    } else {
        q.greedy(state)
    }
}

/// Continuous quantities the policy-side shaping looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyFeatures {
    pub d: f64,
    pub e: f64,
    pub omega: f64,
}

/// Action after hysteresis and zero-lock shaping. When `lock_omega` is set
/// the environment forces the next turn rate to zero instead of
/// integrating `a_omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedAction {
    pub index: usize,
    pub a_v: f64,
    pub a_omega: f64,
    pub lock_omega: bool,
}

pub fn shape_policy_action(
    raw: Action,
    f: &PolicyFeatures,
    phase: Phase,
    w: &RewardWeights,
    limits: &MotionLimits,
) -> ShapedAction {
    let mut out = ShapedAction {
        index: raw.index,
        a_v: raw.a_v,
        a_omega: raw.a_omega,
        lock_omega: false,
    };
    if f.e.abs() < w.e_db && f.omega.abs() < w.omega_db {
        out.a_omega = 0.0;
    }
    if f.e.abs() <= w.e_lock && f.d <= w.d_lock {
        match phase {
            Phase::Train => {
                out.a_omega = sat(-f.omega / limits.dt, limits.a_omega_min, limits.a_omega_max);
            }
            Phase::Eval => {
                out.a_omega = 0.0;
                out.lock_omega = true;
            }
        }
    }
    out
}
