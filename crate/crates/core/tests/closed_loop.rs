mod common;

use std::path::Path;

use goalreach_core::config::{Config, ScenarioConfig, Terrain};
use goalreach_core::nn::ModelFile;
use goalreach_core::planner::PlannerArtifact;
use goalreach_core::pose::{NoiseSpec, PoseSource};
use goalreach_core::sim::{read_telemetry, simulate, write_telemetry, SimOutput};
use goalreach_core::supervisor::{FaultEvent, FaultKind, FaultTrigger, Mode};

fn config(sc: ScenarioConfig, terrain: Terrain, seed: u64) -> Config {
    let mut cfg = Config {
        planner: common::closed_loop_planner_config(),
        scenario: sc,
        ..Config::default()
    };
    cfg.set_terrain(terrain);
    cfg.apply_seed(seed);
    cfg
}

fn run(cfg: &Config, base: &Path) -> SimOutput {
    simulate(cfg, common::planner(), &common::inverse_model().0, base).unwrap()
}

#[test]
fn report_is_internally_consistent() {
    let cfg = config(ScenarioConfig::table_iii(), Terrain::Asphalt, 3);
    let out = run(&cfg, Path::new("."));
    let r = &out.report;
    assert_eq!(out.telemetry.len(), r.ticks);
    assert!(out.telemetry.iter().enumerate().all(|(k, row)| row.tick == k));
    assert_eq!(r.rmse.to_bits(), r.recomputed_rmse().to_bits());
    assert_eq!(r.mode_ticks.iter().map(|m| m.ticks).sum::<usize>(), r.ticks);
    assert!(r.transitions.iter().all(|t| t.from.may_enter(t.to)));
    assert_eq!(r.wheel_metrics.len(), 4);
    assert_eq!(r.unguarded_violation_ticks, 0);
}

#[test]
fn telemetry_file_reloads_exactly() {
    let cfg = config(ScenarioConfig::table_iv(), Terrain::Soft, 1);
    let out = run(&cfg, Path::new("."));
    let mut buf = Vec::new();
    write_telemetry(&mut buf, &out.telemetry).unwrap();
    assert_eq!(read_telemetry(buf.as_slice()).unwrap(), out.telemetry);
}

#[test]
fn replayed_pose_log_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ScenarioConfig::table_iii(), Terrain::Soft, 5);
    cfg.scenario.fault = None;
    let live = run(&cfg, dir.path());
    live.poses.save(&dir.path().join("poses.csv")).unwrap();

    let mut replay_cfg = cfg.clone();
    replay_cfg.pose = PoseSource::Replay {
        path: "poses.csv".into(),
    };
    let replay = run(&replay_cfg, dir.path());
    assert_eq!(replay.telemetry, live.telemetry);
    assert_eq!(replay.report, live.report);
}

#[test]
fn mid_sequence_jump_brakes_and_returns_home() {
    let mut sc = ScenarioConfig::table_iv();
    sc.fault = Some(FaultEvent {
        trigger: FaultTrigger::AfterGoal { index: 1 },
        fault: FaultKind::PoseJump { distance: 12.0 },
    });
    let cfg = config(sc, Terrain::Asphalt, 0);
    let out = run(&cfg, Path::new("."));
    let r = &out.report;
    assert!(r.fault_tick.is_some());
    assert_eq!(r.goals.iter().filter(|g| g.reached).count(), 2);
    assert!(!r.all_goals_reached);
    assert!(r.braking_latency().is_some_and(|l| l <= 1));
    let safe = r.safe_return.as_ref().unwrap();
    assert!(safe.within_tol, "{safe:?}");
    assert!(!r.success);
    assert_eq!(out.telemetry.last().unwrap().mode, Mode::Stopped);
}

#[test]
fn frozen_pose_times_out_without_violation() {
    let mut sc = ScenarioConfig::table_iii();
    sc.fault = Some(FaultEvent {
        trigger: FaultTrigger::AfterGoal { index: 0 },
        fault: FaultKind::PoseFreeze,
    });
    sc.segment_timeout = 1200;
    let cfg = config(sc, Terrain::Asphalt, 0);
    let out = run(&cfg, Path::new("."));
    let r = &out.report;
    // the robot drives on while the reported pose sits still
    assert!(!r.success);
    assert_eq!(r.goals.len(), 2);
    assert!(r.goals[0].reached && !r.goals[1].reached);
    assert!(r.violation_tick.is_none());
}

#[test]
fn small_pose_noise_still_reaches_goals() {
    let mut cfg = config(ScenarioConfig::table_iii(), Terrain::Asphalt, 2);
    cfg.pose = PoseSource::Noisy(NoiseSpec {
        position_sigma: 0.005,
        heading_sigma: 0.002,
        seed: 0,
    });
    cfg.apply_seed(2);
    let out = run(&cfg, Path::new("."));
    assert!(out.report.all_goals_reached, "{:?}", out.report.goals);
}

#[test]
fn saved_artifacts_drive_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("planner.json");
    let m = dir.path().join("model.json");
    common::planner().save(&q).unwrap();
    let (net, rep) = common::inverse_model();
    ModelFile::from_model(net, &rep.training_hash).save(&m).unwrap();
    let planner = PlannerArtifact::load(&q).unwrap();
    let model = ModelFile::load(&m).unwrap().into_model().unwrap();

    let cfg = config(ScenarioConfig::table_iii(), Terrain::Asphalt, 4);
    let a = run(&cfg, dir.path());
    let b = simulate(&cfg, &planner, &model, dir.path()).unwrap();
    assert_eq!(
        serde_json::to_string(&a.report).unwrap(),
        serde_json::to_string(&b.report).unwrap()
    );
}
