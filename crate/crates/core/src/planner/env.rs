//! Episodic training environment around the unicycle model.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::actions::ActionGrid;
use super::discretize::{DiscreteState, DiscretizerSpec};
use super::policy::{select_action, shape_policy_action, Phase, PolicyFeatures, ShapedAction};
use super::qtable::{td_update, QTable, TransitionRecord};
use super::reward::{shape_reward, task_reward, RewardWeights, TerminalCause, Transition};
use super::train::{TrainConfig, UpdateRule};
use crate::error::{Error, Result};
use crate::geometry::{advance_pose, features_to, sat, step_unicycle, GoalSpec, MotionLimits, RobotState, Workspace};

/// Where episode goals are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalPlacement {
    /// Goal at the workspace centre, start anywhere.
    Center,
    /// Goal and start both uniform over the workspace.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub workspace: Workspace,
    pub limits: MotionLimits,
    pub goal_tol: f64,
    pub start_min_dist: f64,
    pub timeout_steps: usize,
    pub goal_placement: GoalPlacement,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        if !(self.goal_tol > 0.0) {
            return Err(Error::InvalidConfig("goal tolerance must be > 0".into()));
        }
        if self.start_min_dist <= self.goal_tol {
            return Err(Error::InvalidConfig(format!(
                "start_min_dist {} must exceed goal_tol {}",
                self.start_min_dist, self.goal_tol
            )));
        }
        if self.timeout_steps == 0 {
            return Err(Error::InvalidConfig("timeout_steps must be > 0".into()));
        }
        Ok(())
    }
}

/// Live episode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub state: RobotState,
    pub goal: GoalSpec,
    pub steps: usize,
    pub sign_e0: f64,
    pub d: f64,
    pub e: f64,
}

impl Episode {
    pub fn new(state: RobotState, goal: GoalSpec) -> Self {
        let (d, e) = features_to(state.x, state.y, state.theta, goal.x, goal.y);
        Self {
            state,
            goal,
            steps: 0,
            sign_e0: if e == 0.0 { 0.0 } else { e.signum() },
            d,
            e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub shaped: ShapedAction,
    pub reward: f64,
    pub terminal: Option<TerminalCause>,
}

#[derive(Debug, Clone)]
pub struct PlannerEnv {
    pub cfg: EnvConfig,
    pub spec: DiscretizerSpec,
    pub grid: ActionGrid,
    pub weights: RewardWeights,
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub records: Vec<TransitionRecord>,
    pub total_return: f64,
    pub final_distance: f64,
    pub steps: usize,
    pub cause: TerminalCause,
}

impl PlannerEnv {
    pub fn new(cfg: EnvConfig, spec: DiscretizerSpec, grid: ActionGrid, weights: RewardWeights) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        grid.validate(&cfg.limits)?;
        if !weights.all_non_negative() {
            return Err(Error::InvalidConfig("reward weights must be non-negative".into()));
        }
        Ok(Self {
            cfg,
            spec,
            grid,
            weights,
        })
    }

    pub fn new_table(&self) -> Result<QTable> {
        QTable::new(self.spec, self.grid.clone())
    }

    /// Samples a goal and a resting start at least `start_min_dist` away.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Episode {
        let ws = &self.cfg.workspace;
        let uniform = |rng: &mut R| (rng.random_range(ws.x_lo..=ws.x_hi), rng.random_range(ws.y_lo..=ws.y_hi));
        let (gx, gy) = match self.cfg.goal_placement {
            GoalPlacement::Center => ws.center(),
            GoalPlacement::Uniform => uniform(rng),
        };
        let goal = GoalSpec {
            x: gx,
            y: gy,
            tol: self.cfg.goal_tol,
        };
        loop {
            let (x, y) = uniform(rng);
            if (gx - x).hypot(gy - y) >= self.cfg.start_min_dist {
                let theta = rng.random_range(-PI..PI);
                return Episode::new(RobotState::at_rest(x, y, theta), goal);
            }
        }
    }

    pub fn discretize(&self, ep: &Episode) -> DiscreteState {
        self.spec.discretize(ep.d, ep.e, ep.state.v, ep.state.omega)
    }

    /// Applies action `index` and advances the episode.
    pub fn step(&self, ep: &mut Episode, index: usize, phase: Phase) -> StepResult {
        let limits = &self.cfg.limits;
        let raw = self.grid.action(index);
        let feats = PolicyFeatures {
            d: ep.d,
            e: ep.e,
            omega: ep.state.omega,
        };
        let shaped = shape_policy_action(raw, &feats, phase, &self.weights, limits);
        let next = if shaped.lock_omega {
            let v = sat(ep.state.v + shaped.a_v * limits.dt, limits.v_min, limits.v_max);
            advance_pose(&ep.state, v, 0.0, limits.dt)
        } else {
            step_unicycle(&ep.state, shaped.a_v, shaped.a_omega, limits)
        };
        let (d_next, e_next) = features_to(next.x, next.y, next.theta, ep.goal.x, ep.goal.y);
        let steps = ep.steps + 1;
        let terminal = if d_next <= ep.goal.tol {
            Some(TerminalCause::Goal)
        } else if !self.cfg.workspace.contains(next.x, next.y) {
            Some(TerminalCause::OutOfWorkspace)
        } else if steps >= self.cfg.timeout_steps {
            Some(TerminalCause::Timeout)
        } else {
            None
        };
        let tr = Transition {
            d_t: ep.d,
            d_next,
            e_t: ep.e,
            e_next,
            v_next: next.v,
            omega_t: ep.state.omega,
            omega_next: next.omega,
            a_v: shaped.a_v,
            a_omega: shaped.a_omega,
            sign_e0: ep.sign_e0,
            goal_tol: ep.goal.tol,
        };
        let reward =
            task_reward(ep.d, d_next, terminal, d_next, &self.weights) + shape_reward(&tr, &self.weights, limits);
        ep.state = next;
        ep.d = d_next;
        ep.e = e_next;
        ep.steps = steps;
        StepResult {
            shaped,
            reward,
            terminal,
        }
    }

    /// Runs one episode from a freshly sampled start. In the training phase
    /// every transition is fed to [`td_update`] as it happens.
    pub fn run_episode<R: Rng + ?Sized>(
        &self,
        q: &mut QTable,
        cfg: &TrainConfig,
        phase: Phase,
        eps: f64,
        rng: &mut R,
        record: bool,
    ) -> Result<EpisodeOutcome> {
        let ep = self.reset(rng);
        self.run_from(ep, q, cfg, phase, eps, rng, record)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn run_from<R: Rng + ?Sized>(
        &self,
        mut ep: Episode,
        q: &mut QTable,
        cfg: &TrainConfig,
        phase: Phase,
        eps: f64,
        rng: &mut R,
        record: bool,
    ) -> Result<EpisodeOutcome> {
        let learn = phase == Phase::Train;
        let mut records = Vec::new();
        let mut total = 0.0;
        let mut s = self.discretize(&ep).flat;
        let mut a = select_action(q, s, eps, rng);
        loop {
            let step = self.step(&mut ep, a, phase);
            total += step.reward;
            let s_next = self.discretize(&ep).flat;
            let mut rec = TransitionRecord {
                state: s,
                action: a,
                reward: step.reward,
                next_state: s_next,
                next_action: None,
                terminal: step.terminal,
            };
            let a_next = match step.terminal {
                Some(_) => None,
                None if cfg.rule == UpdateRule::Sarsa || !learn => Some(select_action(q, s_next, eps, rng)),
                None => None,
            };
            rec.next_action = a_next;
            if learn {
                td_update(q, &rec, cfg)?;
            }
            if record {
                records.push(rec);
            }
            if let Some(cause) = step.terminal {
                return Ok(EpisodeOutcome {
                    records,
                    total_return: total,
                    final_distance: ep.d,
                    steps: ep.steps,
                    cause,
                });
            }
            s = s_next;
            a = match a_next {
                Some(a) => a,
                None => select_action(q, s_next, eps, rng),
            };
        }
    }
}
