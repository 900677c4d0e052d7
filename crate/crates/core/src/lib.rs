//! Goal-reaching control stack for a heavy skid-steered robot.

// NaN must fail range checks, so `!(x > 0.0)` is intentional throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod planner;
pub mod plant;
pub mod pose;
pub mod sim;
pub mod supervisor;

pub use config::{Config, ScenarioConfig, StepConfig, Terrain};
pub use error::{Error, ErrorCategory, Result};
pub use geometry::{GoalSpec, MotionLimits, Pose2, RobotState, Workspace};
pub use sim::{simulate, step_response, RunReport, SimOutput, StepReport, TelemetryRow};
