//! Scenario and pipeline configuration. Every field has a default; a TOML
//! file only needs to name what it changes.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::{ControllerGains, VehicleGeometry};
use crate::error::{Error, Result};
use crate::nn::FitConfig;
use crate::planner::PlannerConfig;
use crate::plant::{DatasetRequest, DisturbanceSpec, PlantParams, SpeedRange};
use crate::pose::PoseSource;
use crate::supervisor::{table_iii_goals, table_iv_goals, FaultEvent, SupervisorConfig};

/// Shipped configuration with all defaults spelled out.
pub const BASELINE_TOML: &str = include_str!("../configs/baseline.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terrain {
    Asphalt,
    Soft,
}

impl Terrain {
    /// Disturbance bound as a fraction of the peak actuator force.
    pub fn bound_ratio(self) -> f64 {
        match self {
            Terrain::Asphalt => 0.05,
            Terrain::Soft => 0.25,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Terrain::Asphalt => "asphalt",
            Terrain::Soft => "soft",
        }
    }
}

impl FromStr for Terrain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asphalt" => Ok(Terrain::Asphalt),
            "soft" | "soft-soil" => Ok(Terrain::Soft),
            other => Err(Error::InvalidConfig(format!("unknown terrain {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorConfig {
    pub plant: PlantParams,
    pub dataset: DatasetRequest,
    /// Speeds the wheels are expected to run at.
    pub operating: SpeedRange,
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        Self {
            plant: PlantParams::default(),
            dataset: DatasetRequest::default(),
            operating: SpeedRange { lo: -0.15, hi: 0.40 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub terrain: Terrain,
    /// Overrides the terrain preset when present.
    pub disturbance: Option<DisturbanceSpec>,
    pub goals: Vec<(f64, f64)>,
    /// Start pose `(x, y, theta)`.
    pub start: (f64, f64, f64),
    pub zeta: f64,
    pub goal_tol: f64,
    /// Ticks allowed per goal segment.
    pub segment_timeout: usize,
    pub max_ticks: usize,
    pub fault: Option<FaultEvent>,
    /// Ticks allowed after stopping at the safe point for the robot to settle.
    pub settle_ticks: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::table_iii()
    }
}

impl ScenarioConfig {
    pub fn table_iii() -> Self {
        let goals = table_iii_goals();
        Self {
            name: "table-iii".into(),
            terrain: Terrain::Asphalt,
            disturbance: None,
            fault: Some(FaultEvent::offset_after_goal(goals.len() - 1, 0.0, 10.0)),
            goals,
            start: (0.0, 0.0, FRAC_PI_2),
            zeta: 1.5,
            goal_tol: 0.10,
            segment_timeout: 9600,
            max_ticks: 60_000,
            settle_ticks: 400,
        }
    }

    pub fn table_iv() -> Self {
        let goals = table_iv_goals();
        Self {
            name: "table-iv".into(),
            terrain: Terrain::Soft,
            fault: Some(FaultEvent::offset_after_goal(goals.len() - 1, 0.0, 10.0)),
            goals,
            ..Self::table_iii()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table-iii" => Ok(Self::table_iii()),
            "table-iv" => Ok(Self::table_iv()),
            other => Err(Error::InvalidConfig(format!("unknown scenario preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.goal_tol > 0.0) {
            return Err(Error::InvalidConfig("zeta and goal_tol must be positive".into()));
        }
        if self.segment_timeout == 0 || self.max_ticks == 0 {
            return Err(Error::InvalidConfig("tick budgets must be positive".into()));
        }
        let (x, y, th) = self.start;
        if self.goals.iter().any(|g| !(g.0.is_finite() && g.1.is_finite())) || ![x, y, th].iter().all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("scenario coordinates"));
        }
        if let Some(d) = &self.disturbance {
            d.validate()?;
        }
        Ok(())
    }
}

/// Dedicated wheel step-response scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    pub reference: f64,
    pub duration: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            reference: 0.2,
            duration: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactPaths {
    pub q_table: Option<String>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Root seed; every stochastic component derives its seed from it.
    pub seed: u64,
    pub planner: PlannerConfig,
    pub actuator: ActuatorConfig,
    pub dnn: FitConfig,
    pub controller: ControllerGains,
    pub vehicle: VehicleGeometry,
    pub supervisor: SupervisorConfig,
    pub scenario: ScenarioConfig,
    pub step: StepConfig,
    pub pose: PoseSource,
    pub artifacts: ArtifactPaths,
}

impl Default for Config {
    fn default() -> Self {
        let mut c = Self {
            seed: 0,
            planner: PlannerConfig::default(),
            actuator: ActuatorConfig::default(),
            dnn: FitConfig::default(),
            controller: ControllerGains::default(),
            vehicle: VehicleGeometry::default(),
            supervisor: SupervisorConfig::default(),
            scenario: ScenarioConfig::default(),
            step: StepConfig::default(),
            pose: PoseSource::GroundTruth,
            artifacts: ArtifactPaths::default(),
        };
        c.apply_seed(0);
        c
    }
}

impl Config {
    pub fn baseline() -> Result<Self> {
        Self::from_toml_str(BASELINE_TOML)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut c: Config = toml::from_str(text)?;
        c.apply_seed(c.seed);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::artifact(path, format!("cannot read config: {e}")))?;
        Self::from_toml_str(&text)
    }

    /// Sets the root seed and the per-component seeds derived from it.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.planner.train.seed = seed;
        self.actuator.dataset.seed = seed;
        self.dnn.seed = seed;
        if let Some(d) = &mut self.scenario.disturbance {
            d.seed = seed;
        }
        if let PoseSource::Noisy(n) = &mut self.pose {
            n.seed = seed;
        }
    }

    pub fn set_terrain(&mut self, terrain: Terrain) {
        self.scenario.terrain = terrain;
        self.scenario.disturbance = None;
    }

    pub fn validate(&self) -> Result<()> {
        self.planner.env()?;
        self.planner.train.validate()?;
        self.actuator.plant.validate()?;
        self.dnn.validate()?;
        self.controller.validate()?;
        self.vehicle.validate()?;
        self.supervisor.validate()?;
        self.scenario.validate()?;
        if !(self.step.reference != 0.0 && self.step.duration > 0.0) {
            return Err(Error::InvalidConfig(
                "step scenario needs a nonzero reference and positive duration".into(),
            ));
        }
        if (self.planner.limits.dt - self.actuator.dataset.dt).abs() > 1e-12 {
            return Err(Error::InvalidConfig("planner and actuator timesteps differ".into()));
        }
        Ok(())
    }

    /// Wheel disturbance for the scenario: explicit override or terrain preset.
    pub fn disturbance(&self) -> DisturbanceSpec {
        match self.scenario.disturbance {
            Some(d) => d,
            None => {
                let peak = self.actuator.plant.peak_force(self.actuator.operating);
                DisturbanceSpec::stochastic(self.scenario.terrain.bound_ratio() * peak, self.seed)
            }
        }
    }
}
