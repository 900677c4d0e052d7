use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

const FAST: &str = r#"
[planner.workspace]
x_lo = -10.0
x_hi = 10.0
y_lo = -10.0
y_hi = 10.0

[planner.train]
episodes = 30000
eval_episodes = 100

[dnn]
hidden = [16, 16]
max_epochs = 200
"#;

fn goalreach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goalreach"))
        .args(args)
        .output()
        .expect("spawn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Planner, dataset and model trained once for the whole file.
struct Trained {
    dir: TempDir,
}

impl Trained {
    fn config(&self) -> PathBuf {
        self.dir.path().join("fast.toml")
    }
    fn artifacts(&self) -> PathBuf {
        self.dir.path().join("artifacts")
    }
    fn planner(&self) -> PathBuf {
        self.artifacts().join("planner.json")
    }
    fn model(&self) -> PathBuf {
        self.artifacts().join("inverse_model.json")
    }
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Trained {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(t.config(), FAST).unwrap();
        let (cfg, art) = (t.config(), t.artifacts());
        for cmd in ["train-planner", "gen-actuator-data", "train-dnn"] {
            ok(&goalreach(&["--config", s(&cfg), "--out-dir", s(&art), cmd]));
        }
        t
    })
}

fn simulate_into(out: &Path, extra: &[&str]) -> Output {
    let t = trained();
    let mut args = vec![
        "--config",
        s(&t.config()).to_owned().leak(),
        "--out-dir",
        s(out).to_owned().leak(),
        "simulate",
        "--planner",
        s(&t.planner()).to_owned().leak(),
        "--model",
        s(&t.model()).to_owned().leak(),
    ];
    args.extend_from_slice(extra);
    goalreach(&args)
}

#[test]
fn training_writes_all_artifacts() {
    let t = trained();
    for f in [
        "planner.json",
        "learning_curve.csv",
        "planner_eval.json",
        "actuator_data.csv",
        "actuator_data.meta.json",
        "inverse_model.json",
        "train_report.json",
    ] {
        assert!(t.artifacts().join(f).is_file(), "missing {f}");
    }
    let curve = fs::read_to_string(t.artifacts().join("learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 30_001);
    let rep: serde_json::Value =
        serde_json::from_slice(&fs::read(t.artifacts().join("train_report.json")).unwrap()).unwrap();
    assert!(rep["relative_test_mse"].as_f64().unwrap() < 0.01);
}

#[test]
fn simulation_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&simulate_into(&a, &["--terrain", "soft", "--seed", "3"]));
    ok(&simulate_into(&b, &["--terrain", "soft", "--seed", "3"]));
    for f in ["run_report.json", "telemetry.csv", "transitions.csv", "poses.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(a.join("run_report.json")).unwrap()).unwrap();
    assert_eq!(rep["terrain"], "soft");
    assert_eq!(rep["success"], true);
    let ticks = rep["ticks"].as_u64().unwrap() as usize;
    let rows = fs::read_to_string(a.join("telemetry.csv")).unwrap().lines().count();
    assert_eq!(rows, ticks + 1);
}

#[test]
fn table_iv_preset_runs_six_goals() {
    let d = tempfile::tempdir().unwrap();
    ok(&simulate_into(d.path(), &["--scenario", "table-iv"]));
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("run_report.json")).unwrap()).unwrap();
    assert_eq!(rep["goals"].as_array().unwrap().len(), 6);
    assert_eq!(rep["scenario"], "table-iv");
}

#[test]
fn report_writes_metrics_and_plot_data() {
    let d = tempfile::tempdir().unwrap();
    ok(&simulate_into(d.path(), &[]));
    let out = goalreach(&["--out-dir", s(d.path()), "report"]);
    ok(&out);
    let metrics = fs::read_to_string(d.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("wheel,segment_start"));
    assert_eq!(metrics.lines().count(), 5);
    let plot = fs::read_to_string(d.path().join("plot_data.csv")).unwrap();
    let tel = fs::read_to_string(d.path().join("telemetry.csv")).unwrap();
    assert_eq!(plot.lines().count(), tel.lines().count());
}

#[test]
fn step_scenario_reports_four_wheels() {
    let d = tempfile::tempdir().unwrap();
    ok(&simulate_into(d.path(), &["--step"]));
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("step_report.json")).unwrap()).unwrap();
    let wheels = rep["wheels"].as_array().unwrap();
    assert_eq!(wheels.len(), 4);
    for w in wheels {
        assert!(w["steady_state_error"].as_f64().unwrap() <= 0.01);
    }
}

#[test]
fn empty_goal_list_succeeds_with_zero_rmse() {
    let t = trained();
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.toml");
    fs::write(&cfg, format!("{FAST}\n[scenario]\ngoals = []\n")).unwrap();
    let out = goalreach(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(d.path()),
        "simulate",
        "--planner",
        s(&t.planner()),
        "--model",
        s(&t.model()),
    ]);
    ok(&out);
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("run_report.json")).unwrap()).unwrap();
    assert_eq!(rep["rmse"], 0.0);
    assert_eq!(rep["success"], true);
}

#[test]
fn mid_sequence_fault_exits_with_safety_code() {
    let t = trained();
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("fault.toml");
    fs::write(
        &cfg,
        format!(
            "{FAST}\n[scenario.fault.trigger]\nat = \"after-goal\"\nindex = 0\n\n[scenario.fault.fault]\nkind = \"pose-jump\"\ndistance = 12.0\n"
        ),
    )
    .unwrap();
    let out = goalreach(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(d.path()),
        "simulate",
        "--planner",
        s(&t.planner()),
        "--model",
        s(&t.model()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("run_report.json")).unwrap()).unwrap();
    assert_eq!(rep["safe_return"]["within_tol"], true);
}

#[test]
fn missing_artifact_is_a_startup_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let out = goalreach(&["--out-dir", s(d.path()), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inverse_model.json"), "{err}");
    assert!(!d.path().join("telemetry.csv").exists());
}

#[test]
fn mismatched_planner_limits_are_rejected() {
    let t = trained();
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("fast_v.toml");
    fs::write(&cfg, format!("{FAST}\n[planner.limits]\nv_max = 0.3\n")).unwrap();
    let out = goalreach(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(d.path()),
        "simulate",
        "--planner",
        s(&t.planner()),
        "--model",
        s(&t.model()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.path().join("run_report.json").exists());
}

#[test]
fn outputs_are_write_once() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("small.toml");
    fs::write(&cfg, "[actuator.dataset]\nduration = 120.0\n").unwrap();
    ok(&goalreach(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(d.path()),
        "gen-actuator-data",
    ]));
    let again = goalreach(&["--config", s(&cfg), "--out-dir", s(d.path()), "gen-actuator-data"]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("already exists"));
}

#[test]
fn invalid_configuration_exits_with_validation_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[controller]\nepsilon = 0.1\n").unwrap();
    let out = goalreach(&["--config", s(&cfg), "--out-dir", s(d.path()), "train-planner"]);
    assert_eq!(out.status.code(), Some(2));
    let bad_flag = goalreach(&["--rule", "montecarlo", "train-planner"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn rule_and_seed_flags_reach_the_trainer() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("tiny.toml");
    fs::write(&cfg, "[planner.train]\nepisodes = 50\neval_episodes = 5\n").unwrap();
    let run = |dir: &str, seed: &str| {
        let out = d.path().join(dir);
        ok(&goalreach(&[
            "--config",
            s(&cfg),
            "--out-dir",
            s(&out),
            "--rule",
            "sarsa",
            "--seed",
            seed,
            "train-planner",
        ]));
        fs::read(out.join("planner.json")).unwrap()
    };
    let a = run("a", "11");
    let file: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(file["train"]["rule"], "sarsa");
    assert_eq!(file["train"]["seed"], 11);
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
}
