//! Closed-loop simulation: planner, supervisor, wheel controllers, actuator
//! plants and vehicle kinematics stepped together at the control rate.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Config, StepConfig};
use crate::control::{
    allocate_wheel_refs, barrier_gain, body_from_wheels, control_step_with_gain, SafetyZone, WheelLoopState, WHEELS,
};
use crate::error::{Error, Result};
use crate::geometry::{advance_pose, features_to, sat, GoalSpec, RobotState};
use crate::metrics::{constant_segments, rmse, step_metrics, StepMetrics};
use crate::nn::NetworkModel;
use crate::planner::{shape_policy_action, Phase, PlannerArtifact, PolicyFeatures};
use crate::plant::{Disturbance, WheelPlant};
use crate::pose::{PoseLog, PoseProvider, PoseSample};
use crate::supervisor::{Command, FaultInjector, FaultTrigger, Mode, ModeTransition, Supervisor, TickInput};

/// One row per control tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub tick: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub x_meas: f64,
    pub y_meas: f64,
    pub theta_meas: f64,
    pub mode: Mode,
    pub zone_e: f64,
    pub zone_o: f64,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    pub vd1: f64,
    pub vd2: f64,
    pub vd3: f64,
    pub vd4: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub chi4: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl TelemetryRow {
    pub fn wheel_refs(&self) -> [f64; WHEELS] {
        [self.vd1, self.vd2, self.vd3, self.vd4]
    }

    pub fn wheel_speeds(&self) -> [f64; WHEELS] {
        [self.v1, self.v2, self.v3, self.v4]
    }
}

pub fn write_telemetry<W: Write>(out: W, rows: &[TelemetryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<TelemetryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<TelemetryRow>, _>>()?;
    if rows.iter().enumerate().any(|(k, row)| row.tick != k) {
        return Err(Error::Dataset("telemetry ticks are not consecutive from zero".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRow {
    pub index: usize,
    pub goal: (f64, f64),
    pub reached: bool,
    /// Tick at which the goal was declared reached, or the run ended.
    pub tick: usize,
    /// True position at that tick.
    pub final_position: (f64, f64),
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeReturn {
    pub final_position: (f64, f64),
    pub error: f64,
    pub within_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTicks {
    pub mode: Mode,
    pub ticks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub terrain: String,
    pub seed: u64,
    pub ticks: usize,
    pub duration: f64,
    pub goals: Vec<GoalRow>,
    pub rmse: f64,
    pub all_goals_reached: bool,
    pub fault_tick: Option<usize>,
    /// First tick with `E ≥ O` observed while the supervisor was not latched.
    pub violation_tick: Option<usize>,
    pub braking_tick: Option<usize>,
    /// Ticks that ended with `E ≥ O` and the supervisor still unlatched.
    pub unguarded_violation_ticks: usize,
    pub safe_return: Option<SafeReturn>,
    pub transitions: Vec<ModeTransition>,
    pub mode_ticks: Vec<ModeTicks>,
    /// Wheel-speed metrics over each wheel's first constant-reference segment.
    pub wheel_metrics: Vec<WheelMetrics>,
    pub success: bool,
}

impl RunReport {
    /// RMSE recomputed from the per-goal rows.
    pub fn recomputed_rmse(&self) -> f64 {
        rmse(&self.goals.iter().map(|g| g.error).collect::<Vec<_>>())
    }

    pub fn braking_latency(&self) -> Option<usize> {
        Some(self.braking_tick? - self.violation_tick?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelMetrics {
    pub wheel: usize,
    pub segment_start: usize,
    pub segment_ticks: usize,
    pub metrics: StepMetrics,
}

/// Shortest constant-reference run that gets step metrics, in ticks.
pub const MIN_SEGMENT_TICKS: usize = 20;

/// Metrics of every wheel over its first nonzero constant-reference segment.
/// Wheels without such a segment are left out.
pub fn wheel_metrics(rows: &[TelemetryRow], dt: f64) -> Result<Vec<WheelMetrics>> {
    let mut out = Vec::new();
    for wheel in 0..WHEELS {
        let refs: Vec<f64> = rows.iter().map(|r| r.wheel_refs()[wheel]).collect();
        let seg = constant_segments(&refs, MIN_SEGMENT_TICKS)
            .into_iter()
            .find(|&(a, _)| refs[a] != 0.0);
        if let Some((a, b)) = seg {
            // the sample before the segment is the speed the step starts from
            let from = a.saturating_sub(1);
            let v: Vec<f64> = rows[from..b].iter().map(|r| r.wheel_speeds()[wheel]).collect();
            out.push(WheelMetrics {
                wheel,
                segment_start: a,
                segment_ticks: b - a,
                metrics: step_metrics(&v, refs[a], dt)?,
            });
        }
    }
    Ok(out)
}

/// Plot-ready series: trajectory, wheel references and speeds per tick.
pub fn write_plot_data<W: Write>(out: W, rows: &[TelemetryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "x", "y", "theta", "mode", "vd1", "v1", "vd2", "v2", "vd3", "v3", "vd4", "v4",
    ])?;
    for r in rows {
        let mut rec = vec![
            r.t.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.theta.to_string(),
            r.mode.to_string(),
        ];
        for (d, v) in r.wheel_refs().iter().zip(r.wheel_speeds()) {
            rec.push(d.to_string());
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: RunReport,
    pub telemetry: Vec<TelemetryRow>,
    /// Reported poses, one per tick, replayable as a pose log.
    pub poses: PoseLog,
}

struct Wheels {
    plants: [WheelPlant; WHEELS],
    loops: [WheelLoopState; WHEELS],
    dist: Vec<Disturbance>,
}

impl Wheels {
    fn new(cfg: &Config, v0: f64) -> Result<Self> {
        let spec = cfg.disturbance();
        Ok(Self {
            plants: [WheelPlant::new(cfg.actuator.plant, v0); WHEELS],
            loops: [WheelLoopState::new(&cfg.controller); WHEELS],
            dist: (0..WHEELS as u64)
                .map(|i| Disturbance::new(spec, i))
                .collect::<Result<_>>()?,
        })
    }

    /// Runs all four loops for one tick; returns the inputs applied.
    fn step(
        &mut self,
        refs: &[f64; WHEELS],
        model: &NetworkModel,
        barrier: f64,
        cfg: &Config,
    ) -> Result<[f64; WHEELS]> {
        let dt = cfg.planner.limits.dt;
        let u_idm = model.forward_batch(refs);
        let mut u = [0.0; WHEELS];
        for i in 0..WHEELS {
            let (ui, next) = control_step_with_gain(
                &self.loops[i],
                self.plants[i].v,
                refs[i],
                u_idm[i],
                barrier,
                &cfg.controller,
                dt,
            )?;
            let d = self.dist[i].sample(dt);
            self.plants[i].step(ui, d, dt);
            if !self.plants[i].v.is_finite() {
                return Err(Error::NonFinite("wheel speed"));
            }
            self.loops[i] = next;
            u[i] = ui;
        }
        Ok(u)
    }

    fn speeds(&self) -> [f64; WHEELS] {
        [0, 1, 2, 3].map(|i| self.plants[i].v)
    }
}

fn can_fire(f: &FaultInjector, n_goals: usize) -> bool {
    match f.event.trigger {
        FaultTrigger::Time { .. } => true,
        FaultTrigger::AfterGoal { index } => index < n_goals,
    }
}

/// Rejects a planner table or network that does not fit the configuration.
pub fn check_artifacts(cfg: &Config, planner: &PlannerArtifact, model: &NetworkModel) -> Result<()> {
    let spec = planner.table.spec();
    let lim = &cfg.planner.limits;
    if (spec.v_min, spec.v_max, spec.omega_min, spec.omega_max) != (lim.v_min, lim.v_max, lim.omega_min, lim.omega_max)
    {
        return Err(Error::InvalidConfig(format!(
            "planner table was built for v in [{}, {}], omega in [{}, {}]; configuration has [{}, {}], [{}, {}]",
            spec.v_min, spec.v_max, spec.omega_min, spec.omega_max, lim.v_min, lim.v_max, lim.omega_min, lim.omega_max
        )));
    }
    planner.table.grid().validate(lim)?;
    let sizes = model.sizes();
    if sizes.first() != Some(&1) || sizes.last() != Some(&1) {
        return Err(Error::InvalidConfig(format!(
            "inverse model must map one input to one output, has sizes {sizes:?}"
        )));
    }
    Ok(())
}

/// Runs a goal-sequence scenario end to end.
pub fn simulate(cfg: &Config, planner: &PlannerArtifact, model: &NetworkModel, base: &Path) -> Result<SimOutput> {
    cfg.validate()?;
    check_artifacts(cfg, planner, model)?;
    let sc = &cfg.scenario;
    let limits = cfg.planner.limits;
    let dt = limits.dt;
    let table = &planner.table;
    let weights = planner.weights;
    let goals: Vec<GoalSpec> = sc
        .goals
        .iter()
        .map(|&(x, y)| GoalSpec::new(x, y, sc.goal_tol))
        .collect::<Result<_>>()?;

    let mut truth = RobotState::at_rest(sc.start.0, sc.start.1, sc.start.2);
    let mut provider = PoseProvider::from_source(&cfg.pose, base)?;
    let mut fault = sc.fault.map(FaultInjector::new);
    let mut sup = Supervisor::new(cfg.supervisor, limits, goals.len())?;
    let mut wheels = Wheels::new(cfg, 0.0)?;
    let first_goal = goals.first().map_or((truth.x, truth.y), |g| (g.x, g.y));
    let mut zone = SafetyZone::new((truth.x, truth.y), first_goal, sc.zeta)?;
    let mut cmd = Command::default();
    let mut goal_rows: Vec<GoalRow> = Vec::with_capacity(goals.len());
    let mut telemetry = Vec::new();
    let mut poses = Vec::new();
    let mut segment_start = 0;
    let mut completed = 0;
    let mut violation_tick = None;
    let mut braking_tick = None;
    let mut unguarded = 0;
    let mut settle = 0;
    let mut timed_out = false;

    for tick in 0..sc.max_ticks {
        let t = tick as f64 * dt;
        if let Some(f) = &mut fault {
            f.arm(tick, t, completed);
        }
        let raw = provider.sample(t, &truth.pose())?;
        let meas = match &mut fault {
            Some(f) => f.apply(raw),
            None => raw,
        };
        poses.push(PoseSample { t, ..meas });
        zone.update(meas.x, meas.y);

        let mode = sup.mode();
        if zone.violated() && !mode.is_latched() {
            violation_tick.get_or_insert(tick);
        }

        let active = sup.active_goal(&goals).copied();
        let mut planner_cmd = Command::default();
        let mut goal_reached = false;
        if let (Some(g), Mode::Nominal | Mode::NearBarrier) = (active, mode) {
            let (d, e) = features_to(meas.x, meas.y, meas.theta, g.x, g.y);
            goal_reached = d <= g.tol;
            let s = table.spec().discretize(d, e, cmd.v, cmd.omega).flat;
            let raw_action = table.grid().action(table.greedy(s));
            let shaped = shape_policy_action(
                raw_action,
                &PolicyFeatures { d, e, omega: cmd.omega },
                Phase::Eval,
                &weights,
                &limits,
            );
            planner_cmd = Command {
                v: sat(cmd.v + shaped.a_v * dt, limits.v_min, limits.v_max),
                omega: if shaped.lock_omega {
                    0.0
                } else {
                    sat(cmd.omega + shaped.a_omega * dt, limits.omega_min, limits.omega_max)
                },
            };
        }

        let (v_body, w_body) = body_from_wheels(&wheels.speeds(), &cfg.vehicle);
        let at_rest = v_body.abs() < cfg.supervisor.rest_speed && w_body.abs() < cfg.supervisor.rest_speed;
        let (next_cmd, ev) = sup.supervise(&TickInput {
            tick,
            zone,
            planner: planner_cmd,
            goal_reached,
            at_rest,
            trusted: truth.pose(),
        });
        cmd = next_cmd;
        if zone.violated() && !sup.mode().is_latched() {
            unguarded += 1;
        }
        if sup.mode() == Mode::Braking && braking_tick.is_none() {
            braking_tick = Some(tick);
        }
        if ev.goal_reached {
            let g = active.expect("goal reached implies an active goal");
            goal_rows.push(GoalRow {
                index: goal_rows.len(),
                goal: (g.x, g.y),
                reached: true,
                tick,
                final_position: (truth.x, truth.y),
                error: truth.pose().distance_to(g.x, g.y),
            });
        }
        if ev.advanced {
            completed += 1;
            segment_start = tick;
            if let Some(next) = sup.active_goal(&goals) {
                zone = SafetyZone::new((meas.x, meas.y), (next.x, next.y), sc.zeta)?;
                zone.update(meas.x, meas.y);
            }
        }

        let barrier = match sup.mode() {
            Mode::Nominal | Mode::NearBarrier | Mode::GoalReached => barrier_gain(&zone).unwrap_or(0.0),
            _ => 0.0,
        };
        let refs = allocate_wheel_refs(cmd.v, cmd.omega, &cfg.vehicle);
        let u = wheels.step(&refs, model, barrier, cfg)?;
        let speeds = wheels.speeds();
        let l = &wheels.loops;
        telemetry.push(TelemetryRow {
            tick,
            t,
            x: truth.x,
            y: truth.y,
            theta: truth.theta,
            x_meas: meas.x,
            y_meas: meas.y,
            theta_meas: meas.theta,
            mode: sup.mode(),
            zone_e: zone.e,
            zone_o: zone.o,
            v_cmd: cmd.v,
            omega_cmd: cmd.omega,
            vd1: refs[0],
            vd2: refs[1],
            vd3: refs[2],
            vd4: refs[3],
            v1: speeds[0],
            v2: speeds[1],
            v3: speeds[2],
            v4: speeds[3],
            e1: l[0].e,
            e2: l[1].e,
            e3: l[2].e,
            e4: l[3].e,
            chi1: l[0].chi_hat,
            chi2: l[1].chi_hat,
            chi3: l[2].chi_hat,
            chi4: l[3].chi_hat,
            u1: u[0],
            u2: u[1],
            u3: u[2],
            u4: u[3],
        });
        let (v_b, w_b) = body_from_wheels(&speeds, &cfg.vehicle);
        truth = advance_pose(&truth, v_b, w_b, dt);

        let rest = v_b.abs() < cfg.supervisor.rest_speed && w_b.abs() < cfg.supervisor.rest_speed;
        match sup.mode() {
            Mode::Stopped => {
                settle += 1;
                if rest || settle >= sc.settle_ticks {
                    break;
                }
            }
            Mode::GoalReached if sup.state.sequence_done && rest => {
                // A fault still pending after the sequence gets `settle_ticks` to act.
                let idle = match &fault {
                    Some(f) if can_fire(f, goals.len()) => f.fired_tick.is_some_and(|k| tick - k >= sc.settle_ticks),
                    _ => true,
                };
                if idle {
                    break;
                }
            }
            Mode::Nominal | Mode::NearBarrier if tick - segment_start >= sc.segment_timeout => {
                timed_out = true;
                break;
            }
            _ => {}
        }
    }

    let ticks = telemetry.len();
    if let Some(g) = sup.active_goal(&goals) {
        if goal_rows.len() == sup.state.goal_index {
            goal_rows.push(GoalRow {
                index: goal_rows.len(),
                goal: (g.x, g.y),
                reached: false,
                tick: ticks.saturating_sub(1),
                final_position: (truth.x, truth.y),
                error: truth.pose().distance_to(g.x, g.y),
            });
        }
    }
    let all_goals_reached = !timed_out && goal_rows.len() == goals.len() && goal_rows.iter().all(|g| g.reached);
    let errors: Vec<f64> = goal_rows.iter().map(|g| g.error).collect();
    let safe_return = (sup.mode() == Mode::Stopped || sup.mode() == Mode::ReturnToSafe).then(|| {
        let sp = cfg.supervisor.safe_point;
        let error = truth.pose().distance_to(sp.0, sp.1);
        SafeReturn {
            final_position: (truth.x, truth.y),
            error,
            within_tol: sup.mode() == Mode::Stopped && error <= cfg.supervisor.safe_tol,
        }
    });
    let mut mode_ticks: Vec<ModeTicks> = Vec::new();
    for row in &telemetry {
        match mode_ticks.iter_mut().find(|m| m.mode == row.mode) {
            Some(m) => m.ticks += 1,
            None => mode_ticks.push(ModeTicks {
                mode: row.mode,
                ticks: 1,
            }),
        }
    }
    mode_ticks.sort_by_key(|m| m.mode);
    let goals_ok = all_goals_reached && errors.iter().all(|e| *e <= sc.goal_tol);
    let safety_ok = match (&fault, &safe_return) {
        (Some(f), _) if f.is_active() => safe_return.as_ref().is_some_and(|s| s.within_tol),
        (_, Some(s)) => s.within_tol,
        _ => true,
    };
    let report = RunReport {
        scenario: sc.name.clone(),
        terrain: match sc.disturbance {
            Some(_) => "custom".into(),
            None => sc.terrain.as_str().into(),
        },
        seed: cfg.seed,
        ticks,
        duration: ticks as f64 * dt,
        rmse: rmse(&errors),
        goals: goal_rows,
        all_goals_reached,
        fault_tick: fault.as_ref().and_then(|f| f.fired_tick),
        violation_tick,
        braking_tick,
        unguarded_violation_ticks: unguarded,
        safe_return,
        transitions: sup.transitions().to_vec(),
        mode_ticks,
        wheel_metrics: wheel_metrics(&telemetry, dt)?,
        success: goals_ok && safety_ok,
    };
    Ok(SimOutput {
        report,
        telemetry,
        poses: PoseLog::new(poses)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub terrain: String,
    pub seed: u64,
    pub reference: f64,
    pub wheels: Vec<StepMetrics>,
}

/// Wheel-speed step from rest to `reference` on all four wheels.
pub fn step_response(cfg: &Config, model: &NetworkModel, step: &StepConfig) -> Result<(StepReport, Vec<TelemetryRow>)> {
    cfg.validate()?;
    let dt = cfg.planner.limits.dt;
    let n = (step.duration / dt).round() as usize;
    let mut wheels = Wheels::new(cfg, 0.0)?;
    let refs = [step.reference; WHEELS];
    let mut rows = Vec::with_capacity(n);
    let mut series: [Vec<f64>; WHEELS] = Default::default();
    for tick in 0..n {
        let u = wheels.step(&refs, model, 0.0, cfg)?;
        let v = wheels.speeds();
        for i in 0..WHEELS {
            series[i].push(v[i]);
        }
        let l = &wheels.loops;
        rows.push(TelemetryRow {
            tick,
            t: tick as f64 * dt,
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            x_meas: 0.0,
            y_meas: 0.0,
            theta_meas: 0.0,
            mode: Mode::Nominal,
            zone_e: 0.0,
            zone_o: cfg.scenario.zeta,
            v_cmd: step.reference,
            omega_cmd: 0.0,
            vd1: refs[0],
            vd2: refs[1],
            vd3: refs[2],
            vd4: refs[3],
            v1: v[0],
            v2: v[1],
            v3: v[2],
            v4: v[3],
            e1: l[0].e,
            e2: l[1].e,
            e3: l[2].e,
            e4: l[3].e,
            chi1: l[0].chi_hat,
            chi2: l[1].chi_hat,
            chi3: l[2].chi_hat,
            chi4: l[3].chi_hat,
            u1: u[0],
            u2: u[1],
            u3: u[2],
            u4: u[3],
        });
    }
    let wheels = series
        .iter()
        .map(|s| step_metrics(s, step.reference, dt))
        .collect::<Result<_>>()?;
    Ok((
        StepReport {
            terrain: match cfg.scenario.disturbance {
                Some(_) => "custom".into(),
                None => cfg.scenario.terrain.as_str().into(),
            },
            seed: cfg.seed,
            reference: step.reference,
            wheels,
        },
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, MinMax};
    use crate::planner::PlannerConfig;

    fn crude_model() -> NetworkModel {
        NetworkModel::from_parts(
            vec![1, 1, 1],
            vec![1.0, 0.0, 60.0, 0.0],
            Activation::Tanh,
            MinMax::IDENTITY,
            MinMax::IDENTITY,
        )
        .unwrap()
    }

    fn untrained() -> PlannerArtifact {
        let pc = PlannerConfig::desk_scale();
        PlannerArtifact {
            table: pc.env().unwrap().new_table().unwrap(),
            weights: pc.weights,
            train: pc.train,
        }
    }

    fn row(tick: usize, vd: f64, v: f64) -> TelemetryRow {
        TelemetryRow {
            tick,
            t: tick as f64 * 0.05,
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            x_meas: 0.0,
            y_meas: 0.0,
            theta_meas: 0.0,
            mode: Mode::Nominal,
            zone_e: 0.0,
            zone_o: 1.0,
            v_cmd: 0.0,
            omega_cmd: 0.0,
            vd1: vd,
            vd2: vd,
            vd3: 0.0,
            vd4: 0.0,
            v1: v,
            v2: v,
            v3: 0.0,
            v4: 0.0,
            e1: v - vd,
            e2: v - vd,
            e3: 0.0,
            e4: 0.0,
            chi1: 0.1,
            chi2: 0.1,
            chi3: 0.1,
            chi4: 0.1,
            u1: 0.0,
            u2: 0.0,
            u3: 0.0,
            u4: 0.0,
        }
    }

    #[test]
    fn empty_sequence_succeeds_immediately() {
        let mut cfg = Config::default();
        cfg.scenario.goals.clear();
        let out = simulate(&cfg, &untrained(), &crude_model(), Path::new(".")).unwrap();
        assert!(out.report.success);
        assert_eq!(out.report.rmse, 0.0);
        assert!(out.report.goals.is_empty());
        assert_eq!(out.report.ticks, 1);
        assert_eq!(out.telemetry.len(), out.report.ticks);
        assert_eq!(out.poses.samples().len(), out.report.ticks);
    }

    #[test]
    fn mismatched_planner_is_rejected_before_running() {
        let mut cfg = Config::default();
        cfg.planner.limits.v_max = 0.5;
        let err = simulate(&cfg, &untrained(), &crude_model(), Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)), "{err}");
    }

    #[test]
    fn missing_replay_log_is_an_artifact_error() {
        let cfg = Config {
            pose: crate::pose::PoseSource::Replay {
                path: "no-such-log.csv".into(),
            },
            ..Config::default()
        };
        let err = simulate(&cfg, &untrained(), &crude_model(), Path::new("/nonexistent")).unwrap_err();
        assert!(matches!(err, Error::Artifact { .. }), "{err}");
    }

    #[test]
    fn telemetry_round_trips() {
        let rows: Vec<TelemetryRow> = (0..30)
            .map(|k| row(k, 0.2, 0.2 * (1.0 - (-(k as f64) / 7.0).exp()) + 1e-17))
            .collect();
        let mut buf = Vec::new();
        write_telemetry(&mut buf, &rows).unwrap();
        assert_eq!(read_telemetry(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn telemetry_gaps_are_rejected() {
        let rows = vec![row(0, 0.0, 0.0), row(2, 0.0, 0.0)];
        let mut buf = Vec::new();
        write_telemetry(&mut buf, &rows).unwrap();
        assert!(matches!(read_telemetry(buf.as_slice()), Err(Error::Dataset(_))));
    }

    #[test]
    fn wheel_metrics_use_first_constant_segment() {
        let mut rows: Vec<TelemetryRow> = (0..10).map(|k| row(k, 0.0, 0.0)).collect();
        rows.extend((10..110).map(|k| row(k, 0.2, if k < 15 { 0.1 } else { 0.2 })));
        let m = wheel_metrics(&rows, 0.05).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].wheel, m[0].segment_start, m[0].segment_ticks), (0, 10, 100));
        assert_eq!(m[0].metrics.overshoot, 0.0);
        assert!((m[0].metrics.settling_time.unwrap() - 6.0 * 0.05).abs() < 1e-12);
        assert_eq!(m[0].metrics.steady_state_error, 0.0);
    }
}
