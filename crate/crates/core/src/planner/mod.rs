//! Tabular reinforcement-learning motion planner acting on linear and
//! angular accelerations.

pub mod actions;
pub mod discretize;
pub mod env;
pub mod policy;
pub mod qtable;
pub mod reward;
pub mod train;

use serde::{Deserialize, Serialize};

pub use actions::{Action, ActionGrid};
pub use discretize::{DiscreteState, DiscretizerSpec};
pub use env::{EnvConfig, Episode, EpisodeOutcome, GoalPlacement, PlannerEnv};
pub use policy::{select_action, shape_policy_action, Phase, PolicyFeatures, ShapedAction};
pub use qtable::{td_update, PlannerArtifact, QTable, TransitionRecord};
pub use reward::{potential, shape_reward, shape_terms, task_reward, RewardWeights, TerminalCause, Transition};
pub use train::{evaluate_greedy, train, CurvePoint, EvalSummary, TrainConfig, UpdateRule};

use crate::error::Result;
use crate::geometry::{MotionLimits, Workspace};

/// Everything needed to build the planner environment and train it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub workspace: Workspace,
    pub limits: MotionLimits,
    /// Distance bin width, m.
    pub distance_resolution: f64,
    pub n_theta: usize,
    pub n_v: usize,
    pub n_omega: usize,
    pub accel_step_v: f64,
    pub accel_step_omega: f64,
    pub goal_tol: f64,
    pub start_min_dist: f64,
    pub timeout_steps: usize,
    pub goal_placement: GoalPlacement,
    pub weights: RewardWeights,
    pub train: TrainConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            workspace: Workspace::square(25.0).expect("valid workspace"),
            limits: MotionLimits::default(),
            distance_resolution: 1.0,
            n_theta: 24,
            n_v: 4,
            n_omega: 5,
            accel_step_v: 0.10,
            accel_step_omega: 0.02,
            goal_tol: 0.10,
            start_min_dist: 0.20,
            timeout_steps: 9600,
            goal_placement: GoalPlacement::Center,
            weights: RewardWeights::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PlannerConfig {
    /// Reduced workspace `[-10, 10]²` and 5,000 training episodes.
    pub fn desk_scale() -> Self {
        Self {
            workspace: Workspace::square(10.0).expect("valid workspace"),
            train: TrainConfig {
                episodes: 5000,
                eval_episodes: 500,
                ..TrainConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn spec(&self) -> Result<DiscretizerSpec> {
        DiscretizerSpec::from_workspace(
            &self.workspace,
            &self.limits,
            self.distance_resolution,
            self.n_theta,
            self.n_v,
            self.n_omega,
        )
    }

    pub fn grid(&self) -> Result<ActionGrid> {
        ActionGrid::from_limits(&self.limits, self.accel_step_v, self.accel_step_omega)
    }

    pub fn env(&self) -> Result<PlannerEnv> {
        PlannerEnv::new(
            EnvConfig {
                workspace: self.workspace,
                limits: self.limits,
                goal_tol: self.goal_tol,
                start_min_dist: self.start_min_dist,
                timeout_steps: self.timeout_steps,
                goal_placement: self.goal_placement,
            },
            self.spec()?,
            self.grid()?,
            self.weights,
        )
    }

    /// Trains with the embedded settings and bundles the result.
    pub fn train(&self) -> Result<(PlannerArtifact, Vec<CurvePoint>)> {
        let env = self.env()?;
        let (table, curve) = train(&env, &self.train)?;
        Ok((
            PlannerArtifact {
                table,
                weights: self.weights,
                train: self.train.clone(),
            },
            curve,
        ))
    }
}
