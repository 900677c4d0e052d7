//! Fixtures shared by the benchmarks.

use goalreach_core::config::Config;
use goalreach_core::nn::{fit, FitConfig, NetworkModel};
use goalreach_core::planner::{PlannerArtifact, PlannerConfig};
use goalreach_core::plant::{generate_dataset, ActuatorDataset};

pub fn dataset() -> ActuatorDataset {
    let c = Config::default();
    generate_dataset(&c.actuator.dataset, &c.actuator.plant, c.actuator.operating).expect("dataset")
}

/// A network of the given shape after `epochs` optimizer iterations.
pub fn network(ds: &ActuatorDataset, hidden: &[usize], epochs: usize) -> NetworkModel {
    let cfg = FitConfig {
        hidden: hidden.to_vec(),
        max_epochs: epochs,
        ..FitConfig::default()
    };
    fit(&ds.v, &ds.u, &cfg).expect("fit").0
}

/// Configuration for closed-loop runs on the reduced workspace.
pub fn closed_loop_config() -> Config {
    let mut planner = PlannerConfig::desk_scale();
    planner.train.episodes = 30_000;
    Config {
        planner,
        ..Config::default()
    }
}

pub fn planner(cfg: &Config) -> PlannerArtifact {
    cfg.planner.train().expect("planner").0
}
