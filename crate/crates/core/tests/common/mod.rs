#![allow(dead_code)]

use std::io::Write;
use std::sync::OnceLock;

use goalreach_core::config::Config;
use goalreach_core::nn::{fit, FitConfig, NetworkModel, TrainReport};
use goalreach_core::planner::{PlannerArtifact, PlannerConfig};
use goalreach_core::plant::{generate_dataset, ActuatorDataset};

/// Episodes for the closed-loop planner: full training length on the reduced workspace.
pub const CLOSED_LOOP_EPISODES: usize = 30_000;

pub fn closed_loop_planner_config() -> PlannerConfig {
    let mut pc = PlannerConfig::desk_scale();
    pc.train.episodes = CLOSED_LOOP_EPISODES;
    pc
}

pub fn planner() -> &'static PlannerArtifact {
    static CELL: OnceLock<PlannerArtifact> = OnceLock::new();
    CELL.get_or_init(|| closed_loop_planner_config().train().expect("planner training").0)
}

pub fn dataset() -> &'static ActuatorDataset {
    static CELL: OnceLock<ActuatorDataset> = OnceLock::new();
    CELL.get_or_init(|| {
        let c = Config::default();
        generate_dataset(&c.actuator.dataset, &c.actuator.plant, c.actuator.operating).expect("dataset")
    })
}

pub fn reduced_fit_config() -> FitConfig {
    FitConfig {
        hidden: vec![64, 42, 21],
        ..FitConfig::default()
    }
}

/// Inverse model at reduced width, fitted once per test binary.
pub fn inverse_model() -> &'static (NetworkModel, TrainReport) {
    static CELL: OnceLock<(NetworkModel, TrainReport)> = OnceLock::new();
    CELL.get_or_init(|| {
        let ds = dataset();
        fit(&ds.v, &ds.u, &reduced_fit_config()).expect("inverse fit")
    })
}

/// Writes a criterion verdict to the real stdout so it shows without `--nocapture`.
pub fn verdict(name: &str, pass: bool, detail: &str) {
    let line = format!("[{}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}
