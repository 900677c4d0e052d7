use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use goalreach_core::config::{Config, ScenarioConfig, Terrain};
use goalreach_core::nn::{fit, ModelFile, NetworkModel};
use goalreach_core::planner::{evaluate_greedy, train::write_curve_csv, PlannerArtifact, UpdateRule};
use goalreach_core::plant::{generate_dataset, ActuatorDataset};
use goalreach_core::sim::{read_telemetry, simulate, step_response, wheel_metrics, write_plot_data, write_telemetry};
use goalreach_core::supervisor::write_transitions_csv;
use goalreach_core::{Error, ErrorCategory, Result};

const PLANNER_FILE: &str = "planner.json";
const CURVE_FILE: &str = "learning_curve.csv";
const PLANNER_EVAL_FILE: &str = "planner_eval.json";
const DATASET_FILE: &str = "actuator_data.csv";
const MODEL_FILE: &str = "inverse_model.json";
const TRAIN_REPORT_FILE: &str = "train_report.json";
const TELEMETRY_FILE: &str = "telemetry.csv";
const RUN_REPORT_FILE: &str = "run_report.json";
const TRANSITIONS_FILE: &str = "transitions.csv";
const POSES_FILE: &str = "poses.csv";
const STEP_TELEMETRY_FILE: &str = "step_telemetry.csv";
const STEP_REPORT_FILE: &str = "step_report.json";
const METRICS_FILE: &str = "metrics.csv";
const PLOT_FILE: &str = "plot_data.csv";

/// Exit status of a run that completed but did not meet its goals.
const EXIT_RUN_FAILED: u8 = 6;

#[derive(Parser)]
#[command(
    name = "goalreach",
    version,
    about = "Train, simulate and evaluate the goal-reaching control stack"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration; the built-in baseline when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    rule: Option<RuleArg>,
    #[arg(long, global = true, value_enum)]
    terrain: Option<TerrainArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Qlearning,
    Sarsa,
}

#[derive(Clone, Copy, ValueEnum)]
enum TerrainArg {
    Asphalt,
    Soft,
}

#[derive(Subcommand)]
enum Command {
    /// Train the tabular planner and write the Q-table and learning curve.
    TrainPlanner,
    /// Record an actuator identification dataset from the simulated plant.
    GenActuatorData,
    /// Fit the inverse actuator network to a recorded dataset.
    TrainDnn {
        /// Defaults to the dataset in the output directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run a goal-sequence scenario, or the wheel step scenario with `--step`.
    Simulate {
        #[arg(long)]
        planner: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Built-in goal sequence, replacing the configured one.
        #[arg(long, value_parser = ["table-iii", "table-iv"])]
        scenario: Option<String>,
        #[arg(long)]
        step: bool,
    },
    /// Compute wheel metrics and plot data from a telemetry file.
    Report {
        /// Defaults to the telemetry file in the output directory.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
}

struct Context {
    cfg: Config,
    /// Directory that relative artifact paths in the configuration resolve against.
    base: PathBuf,
    out: PathBuf,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self> {
        let (mut cfg, base) = match &args.config {
            Some(path) => (
                Config::load(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (Config::baseline()?, PathBuf::from(".")),
        };
        if let Some(seed) = args.seed {
            cfg.apply_seed(seed);
        }
        if let Some(rule) = args.rule {
            cfg.planner.train.rule = match rule {
                RuleArg::Qlearning => UpdateRule::QLearning,
                RuleArg::Sarsa => UpdateRule::Sarsa,
            };
        }
        if let Some(t) = args.terrain {
            cfg.set_terrain(match t {
                TerrainArg::Asphalt => Terrain::Asphalt,
                TerrainArg::Soft => Terrain::Soft,
            });
        }
        cfg.validate()?;
        Ok(Self {
            cfg,
            base,
            out: args.out_dir.clone(),
        })
    }

    /// Output paths for one command. Outputs are write-once: existing files are refused.
    fn outputs<const N: usize>(&self, names: [&str; N]) -> Result<[PathBuf; N]> {
        fs::create_dir_all(&self.out)?;
        let paths = names.map(|n| self.out.join(n));
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::artifact(p, "output already exists; choose a fresh --out-dir"));
        }
        Ok(paths)
    }

    fn artifact(&self, flag: &Option<PathBuf>, configured: &Option<String>, default: &str) -> PathBuf {
        match (flag, configured) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => self.base.join(c),
            (None, None) => self.out.join(default),
        }
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn train_planner(ctx: &Context) -> Result<u8> {
    let [table, curve, eval] = ctx.outputs([PLANNER_FILE, CURVE_FILE, PLANNER_EVAL_FILE])?;
    let pc = &ctx.cfg.planner;
    let (artifact, points) = pc.train()?;
    let summary = evaluate_greedy(&pc.env()?, &artifact.table, pc.train.eval_episodes, ctx.cfg.seed)?;
    artifact.save(&table)?;
    write_curve_csv(fs::File::create(&curve)?, &points)?;
    write_json(&eval, &summary)?;
    println!(
        "{:?}: {} episodes, greedy success {:.3} over {} episodes -> {}",
        pc.train.rule,
        pc.train.episodes,
        summary.success_rate,
        summary.episodes,
        table.display()
    );
    Ok(0)
}

fn gen_actuator_data(ctx: &Context) -> Result<u8> {
    let [csv] = ctx.outputs([DATASET_FILE])?;
    let a = &ctx.cfg.actuator;
    let ds = generate_dataset(&a.dataset, &a.plant, a.operating)?;
    ds.save(&csv)?;
    println!("{} samples -> {}", ds.len(), csv.display());
    Ok(0)
}

fn train_dnn(ctx: &Context, dataset: &Option<PathBuf>) -> Result<u8> {
    let [model, report] = ctx.outputs([MODEL_FILE, TRAIN_REPORT_FILE])?;
    let path = dataset.clone().unwrap_or_else(|| ctx.out.join(DATASET_FILE));
    let ds = ActuatorDataset::load(&path)?;
    let (net, rep) = fit(&ds.v, &ds.u, &ctx.cfg.dnn)?;
    ModelFile::from_model(&net, &rep.training_hash).save(&model)?;
    write_json(&report, &rep)?;
    println!(
        "{} epochs ({:?}), test MSE {:.3e} of target variance -> {}",
        rep.epochs.len(),
        rep.stop,
        rep.relative_test_mse.unwrap_or(f64::NAN),
        model.display()
    );
    Ok(0)
}

fn load_model(path: &Path) -> Result<NetworkModel> {
    ModelFile::load(path)?.into_model()
}

fn run_simulation(
    ctx: &mut Context,
    planner: &Option<PathBuf>,
    model: &Option<PathBuf>,
    scenario: &Option<String>,
    step: bool,
) -> Result<u8> {
    if let Some(name) = scenario {
        let terrain = ctx.cfg.scenario.terrain;
        let disturbance = ctx.cfg.scenario.disturbance;
        ctx.cfg.scenario = ScenarioConfig::preset(name)?;
        ctx.cfg.scenario.terrain = terrain;
        ctx.cfg.scenario.disturbance = disturbance;
    }
    let model_path = ctx.artifact(model, &ctx.cfg.artifacts.model, MODEL_FILE);
    let net = load_model(&model_path)?;
    if step {
        let [tel, rep] = ctx.outputs([STEP_TELEMETRY_FILE, STEP_REPORT_FILE])?;
        let (report, rows) = step_response(&ctx.cfg, &net, &ctx.cfg.step)?;
        write_telemetry(fs::File::create(&tel)?, &rows)?;
        write_json(&rep, &report)?;
        for (i, m) in report.wheels.iter().enumerate() {
            println!(
                "wheel {}: peak {:.2} s, overshoot {:.4} m/s, settling {}, steady-state error {:.4} m/s",
                i + 1,
                m.peak_time,
                m.overshoot,
                m.settling_time
                    .map_or_else(|| "not settled".to_string(), |t| format!("{t:.2} s")),
                m.steady_state_error
            );
        }
        return Ok(0);
    }
    let planner_path = ctx.artifact(planner, &ctx.cfg.artifacts.q_table, PLANNER_FILE);
    let table = PlannerArtifact::load(&planner_path)?;
    let [tel, rep, trans, poses] = ctx.outputs([TELEMETRY_FILE, RUN_REPORT_FILE, TRANSITIONS_FILE, POSES_FILE])?;
    let out = simulate(&ctx.cfg, &table, &net, &ctx.base)?;
    write_telemetry(fs::File::create(&tel)?, &out.telemetry)?;
    write_json(&rep, &out.report)?;
    write_transitions_csv(
        fs::File::create(&trans)?,
        &out.report.transitions,
        ctx.cfg.planner.limits.dt,
    )?;
    out.poses.save(&poses)?;
    let r = &out.report;
    for g in &r.goals {
        println!(
            "goal ({:.2}, {:.2}): {} at ({:.3}, {:.3}), error {:.4} m",
            g.goal.0,
            g.goal.1,
            if g.reached { "reached" } else { "missed" },
            g.final_position.0,
            g.final_position.1,
            g.error
        );
    }
    if let Some(s) = &r.safe_return {
        println!(
            "safe return: ({:.3}, {:.3}), {:.4} m from safe point",
            s.final_position.0, s.final_position.1, s.error
        );
    }
    println!(
        "RMSE {:.4} m over {} goals, success {}",
        r.rmse,
        r.goals.len(),
        r.success
    );
    Ok(match (r.success, r.violation_tick) {
        (true, _) => 0,
        (false, Some(_)) => exit_code(ErrorCategory::Safety),
        (false, None) => EXIT_RUN_FAILED,
    })
}

fn report(ctx: &Context, telemetry: &Option<PathBuf>) -> Result<u8> {
    let path = telemetry.clone().unwrap_or_else(|| ctx.out.join(TELEMETRY_FILE));
    let file = fs::File::open(&path).map_err(|e| Error::artifact(&path, format!("cannot open telemetry: {e}")))?;
    let rows = read_telemetry(file)?;
    let [metrics, plot] = ctx.outputs([METRICS_FILE, PLOT_FILE])?;
    let dt = match rows.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => ctx.cfg.planner.limits.dt,
    };
    let wm = wheel_metrics(&rows, dt)?;
    let mut w = fs::File::create(&metrics)?;
    use std::io::Write;
    writeln!(
        w,
        "wheel,segment_start,segment_ticks,reference,peak_time,overshoot,settling_time,steady_state_error"
    )?;
    println!("wheel  reference  peak(s)  overshoot  settling(s)  ss-error");
    for m in &wm {
        let s = &m.metrics;
        let settle = s.settling_time.map_or(String::new(), |t| t.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            m.wheel + 1,
            m.segment_start,
            m.segment_ticks,
            s.reference,
            s.peak_time,
            s.overshoot,
            settle,
            s.steady_state_error
        )?;
        println!(
            "{:>5}  {:>9.4}  {:>7.2}  {:>9.4}  {:>11}  {:>8.4}",
            m.wheel + 1,
            s.reference,
            s.peak_time,
            s.overshoot,
            s.settling_time.map_or("-".to_string(), |t| format!("{t:.2}")),
            s.steady_state_error
        );
    }
    write_plot_data(fs::File::create(&plot)?, &rows)?;
    println!("{} ticks -> {}, {}", rows.len(), metrics.display(), plot.display());
    Ok(0)
}

fn exit_code(c: ErrorCategory) -> u8 {
    match c {
        ErrorCategory::Validation => 2,
        ErrorCategory::Safety => 3,
        ErrorCategory::Io => 4,
        ErrorCategory::Internal => 5,
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut ctx = Context::new(&cli.common)?;
    match &cli.command {
        Command::TrainPlanner => train_planner(&ctx),
        Command::GenActuatorData => gen_actuator_data(&ctx),
        Command::TrainDnn { dataset } => train_dnn(&ctx, dataset),
        Command::Simulate {
            planner,
            model,
            scenario,
            step,
        } => run_simulation(&mut ctx, planner, model, scenario, *step),
        Command::Report { telemetry } => report(&ctx, telemetry),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let cat = e.category();
            eprintln!("error ({cat:?}): {e}");
            ExitCode::from(exit_code(cat))
        }
    }
}
