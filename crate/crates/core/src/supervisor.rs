//! Safety supervisor: barrier monitoring, velocity limiting near the barrier,
//! latched braking and return to a safe point, goal progression, and pose
//! fault injection.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::control::SafetyZone;
use crate::error::{Error, Result};
use crate::geometry::{features_to, sat, GoalSpec, MotionLimits, Pose2};
use crate::pose::PoseSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Nominal,
    NearBarrier,
    Braking,
    ReturnToSafe,
    Stopped,
    GoalReached,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nominal => "NOMINAL",
            Mode::NearBarrier => "NEAR_BARRIER",
            Mode::Braking => "BRAKING",
            Mode::ReturnToSafe => "RETURN_TO_SAFE",
            Mode::Stopped => "STOPPED",
            Mode::GoalReached => "GOAL_REACHED",
        }
    }

    pub fn is_latched(self) -> bool {
        matches!(self, Mode::Braking | Mode::ReturnToSafe | Mode::Stopped)
    }

    /// Whether the edge `self -> to` belongs to the transition graph.
    pub fn may_enter(self, to: Mode) -> bool {
        use Mode::*;
        matches!(
            (self, to),
            (Nominal, NearBarrier)
                | (NearBarrier, Nominal)
                | (Nominal | NearBarrier | GoalReached, Braking)
                | (Braking, ReturnToSafe)
                | (ReturnToSafe, Stopped)
                | (Nominal | NearBarrier, GoalReached)
                | (GoalReached, Nominal)
        )
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    ApproachingBarrier,
    ClearOfBarrier,
    BarrierViolation,
    BrakedToZero,
    SafePointReached,
    GoalReached,
    NextGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTransition {
    pub tick: usize,
    pub from: Mode,
    pub to: Mode,
    pub cause: Cause,
}

/// Body speed and turn-rate command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisorConfig {
    /// `E/O` at which velocity limiting starts.
    pub near_threshold: f64,
    /// Cap scale reached at `E/O = 1`.
    pub min_scale: f64,
    pub brake_a_v: f64,
    pub brake_a_omega: f64,
    /// Return-to-safe distance gain, 1/s.
    pub k_p: f64,
    /// Return-to-safe heading gain, 1/s.
    pub k_h: f64,
    pub safe_point: (f64, f64),
    pub safe_tol: f64,
    /// Body speed below which the robot counts as at rest.
    pub rest_speed: f64,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        Self {
            near_threshold: 0.9,
            min_scale: 0.2,
            brake_a_v: 0.10,
            brake_a_omega: 0.02,
            k_p: 0.5,
            k_h: 0.8,
            safe_point: (0.0, 0.0),
            safe_tol: 0.10,
            rest_speed: 0.02,
        }
    }
}

impl SupervisorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_threshold > 0.0 && self.near_threshold < 1.0) {
            return Err(Error::InvalidConfig("near_threshold must lie in (0, 1)".into()));
        }
        if !(self.min_scale > 0.0 && self.min_scale <= 1.0) {
            return Err(Error::InvalidConfig("min_scale must lie in (0, 1]".into()));
        }
        let pos = [
            self.brake_a_v,
            self.brake_a_omega,
            self.k_p,
            self.k_h,
            self.safe_tol,
            self.rest_speed,
        ];
        if pos.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidConfig(
                "supervisor gains and tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Speed cap scale for a zone ratio `E/O`: 1 below the threshold, then
    /// linear down to `min_scale` at the barrier.
    pub fn cap_scale(&self, ratio: f64) -> f64 {
        if ratio < self.near_threshold {
            return 1.0;
        }
        let frac = ((ratio - self.near_threshold) / (1.0 - self.near_threshold)).min(1.0);
        1.0 - frac * (1.0 - self.min_scale)
    }
}

/// Go-to-point command toward the safe point with saturated gains.
pub fn return_to_safe_command(pose: &Pose2, cfg: &SupervisorConfig, limits: &MotionLimits) -> (Command, bool) {
    let (d, e) = features_to(pose.x, pose.y, pose.theta, cfg.safe_point.0, cfg.safe_point.1);
    if d <= cfg.safe_tol {
        return (Command::default(), true);
    }
    let v = sat(cfg.k_p * d, limits.v_min, limits.v_max) * e.cos().max(0.0);
    let omega = sat(cfg.k_h * e, limits.omega_min, limits.omega_max);
    (Command { v, omega }, false)
}

/// Moves `x` toward zero by at most `step`.
fn ramp_to_zero(x: f64, step: f64) -> f64 {
    if x > step {
        x - step
    } else if x < -step {
        x + step
    } else {
        0.0
    }
}

/// What the supervisor sees each tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickInput {
    pub tick: usize,
    pub zone: SafetyZone,
    pub planner: Command,
    /// The active goal is reached according to the reported pose.
    pub goal_reached: bool,
    /// Robot body speed is below the rest threshold.
    pub at_rest: bool,
    /// Pose from the trusted channel, used only when returning to safety.
    pub trusted: Pose2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisorState {
    pub mode: Mode,
    pub latched: bool,
    pub goal_index: usize,
    pub sequence_done: bool,
    pub last: Command,
}

/// Events the caller has to act on after a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TickEvents {
    /// The active goal was just reached.
    pub goal_reached: bool,
    /// The robot came to rest after a goal; the next segment starts now.
    pub advanced: bool,
    pub violation: bool,
}

#[derive(Debug, Clone)]
pub struct Supervisor {
    pub cfg: SupervisorConfig,
    pub limits: MotionLimits,
    pub state: SupervisorState,
    n_goals: usize,
    log: Vec<ModeTransition>,
}

impl Supervisor {
    pub fn new(cfg: SupervisorConfig, limits: MotionLimits, n_goals: usize) -> Result<Self> {
        cfg.validate()?;
        limits.validate()?;
        let done = n_goals == 0;
        Ok(Self {
            cfg,
            limits,
            state: SupervisorState {
                mode: if done { Mode::GoalReached } else { Mode::Nominal },
                latched: false,
                goal_index: 0,
                sequence_done: done,
                last: Command::default(),
            },
            n_goals,
            log: Vec::new(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn transitions(&self) -> &[ModeTransition] {
        &self.log
    }

    fn enter(&mut self, tick: usize, to: Mode, cause: Cause) {
        let from = self.state.mode;
        debug_assert!(from.may_enter(to), "{from} -> {to}");
        self.log.push(ModeTransition { tick, from, to, cause });
        self.state.mode = to;
        if to.is_latched() {
            self.state.latched = true;
        }
    }

    fn brake(&self) -> Command {
        let dt = self.limits.dt;
        Command {
            v: ramp_to_zero(self.state.last.v, self.cfg.brake_a_v * dt),
            omega: ramp_to_zero(self.state.last.omega, self.cfg.brake_a_omega * dt),
        }
    }

    /// One supervision step; returns the command to execute.
    pub fn supervise(&mut self, input: &TickInput) -> (Command, TickEvents) {
        let mut ev = TickEvents::default();
        let tick = input.tick;
        let violated = input.zone.violated();
        let cmd = match self.state.mode {
            Mode::Nominal | Mode::NearBarrier | Mode::GoalReached if violated => {
                ev.violation = true;
                self.enter(tick, Mode::Braking, Cause::BarrierViolation);
                self.brake()
            }
            Mode::Nominal | Mode::NearBarrier if input.goal_reached => {
                ev.goal_reached = true;
                self.enter(tick, Mode::GoalReached, Cause::GoalReached);
                self.brake()
            }
            Mode::Nominal | Mode::NearBarrier => {
                let ratio = input.zone.ratio();
                let near = ratio >= self.cfg.near_threshold;
                match (self.state.mode, near) {
                    (Mode::Nominal, true) => self.enter(tick, Mode::NearBarrier, Cause::ApproachingBarrier),
                    (Mode::NearBarrier, false) => self.enter(tick, Mode::Nominal, Cause::ClearOfBarrier),
                    _ => {}
                }
                if near {
                    let s = self.cfg.cap_scale(ratio);
                    Command {
                        v: sat(input.planner.v, self.limits.v_min * s, self.limits.v_max * s),
                        omega: sat(
                            input.planner.omega,
                            self.limits.omega_min * s,
                            self.limits.omega_max * s,
                        ),
                    }
                } else {
                    input.planner
                }
            }
            Mode::GoalReached => {
                let c = self.brake();
                if !self.state.sequence_done && c == Command::default() && input.at_rest {
                    ev.advanced = true;
                    self.state.goal_index += 1;
                    if self.state.goal_index >= self.n_goals {
                        self.state.sequence_done = true;
                    } else {
                        self.enter(tick, Mode::Nominal, Cause::NextGoal);
                    }
                }
                c
            }
            Mode::Braking => {
                let c = self.brake();
                if c == Command::default() {
                    self.enter(tick, Mode::ReturnToSafe, Cause::BrakedToZero);
                }
                c
            }
            Mode::ReturnToSafe => {
                let (c, arrived) = return_to_safe_command(&input.trusted, &self.cfg, &self.limits);
                if arrived {
                    self.enter(tick, Mode::Stopped, Cause::SafePointReached);
                }
                c
            }
            Mode::Stopped => Command::default(),
        };
        self.state.last = cmd;
        (cmd, ev)
    }

    /// Next goal for a sequence, or `None` when done.
    pub fn active_goal<'a>(&self, goals: &'a [GoalSpec]) -> Option<&'a GoalSpec> {
        if self.state.sequence_done {
            None
        } else {
            goals.get(self.state.goal_index)
        }
    }
}

/// Advances along a goal sequence when the current goal is reached.
pub fn advance_goal(goals: &[GoalSpec], index: usize, pose: &Pose2) -> Option<usize> {
    let g = goals.get(index)?;
    if pose.distance_to(g.x, g.y) <= g.tol {
        Some(index + 1)
    } else {
        None
    }
}

pub fn write_transitions_csv<W: Write>(out: W, log: &[ModeTransition], dt: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tick", "t", "from", "to", "cause"])?;
    for tr in log {
        let cause = serde_json::to_value(tr.cause)?;
        w.write_record([
            tr.tick.to_string(),
            (tr.tick as f64 * dt).to_string(),
            tr.from.to_string(),
            tr.to.to_string(),
            cause.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaultKind {
    /// Constant world-frame offset.
    PoseOffset { dx: f64, dy: f64 },
    /// Reported pose held at its value when the fault fires.
    PoseFreeze,
    /// Offset of `distance` along the reported heading at the moment the fault fires.
    PoseJump { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "kebab-case")]
pub enum FaultTrigger {
    Time {
        t: f64,
    },
    /// Fires once goal `index` (zero-based) is completed and the robot is at rest.
    AfterGoal {
        index: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub trigger: FaultTrigger,
    pub fault: FaultKind,
}

impl FaultEvent {
    pub fn offset_after_goal(index: usize, dx: f64, dy: f64) -> Self {
        Self {
            trigger: FaultTrigger::AfterGoal { index },
            fault: FaultKind::PoseOffset { dx, dy },
        }
    }
}

/// Stateful corruption of a pose stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultInjector {
    pub event: FaultEvent,
    active: bool,
    held: Option<PoseSample>,
    jump: (f64, f64),
    pub fired_tick: Option<usize>,
}

impl FaultInjector {
    pub fn new(event: FaultEvent) -> Self {
        Self {
            event,
            active: false,
            held: None,
            jump: (0.0, 0.0),
            fired_tick: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Checks the trigger; `goals_completed` counts goals reached and settled.
    pub fn arm(&mut self, tick: usize, t: f64, goals_completed: usize) {
        if self.active {
            return;
        }
        self.active = match self.event.trigger {
            FaultTrigger::Time { t: at } => t >= at,
            FaultTrigger::AfterGoal { index } => goals_completed > index,
        };
        if self.active {
            self.fired_tick = Some(tick);
        }
    }

    pub fn apply(&mut self, s: PoseSample) -> PoseSample {
        if !self.active {
            return s;
        }
        match self.event.fault {
            FaultKind::PoseOffset { dx, dy } => PoseSample {
                x: s.x + dx,
                y: s.y + dy,
                ..s
            },
            FaultKind::PoseFreeze => {
                let held = *self.held.get_or_insert(s);
                PoseSample { t: s.t, ..held }
            }
            FaultKind::PoseJump { distance } => {
                if self.held.is_none() {
                    self.held = Some(s);
                    self.jump = (distance * s.theta.cos(), distance * s.theta.sin());
                }
                PoseSample {
                    x: s.x + self.jump.0,
                    y: s.y + self.jump.1,
                    ..s
                }
            }
        }
    }
}

/// Goal lists of the two field trials.
pub fn table_iii_goals() -> Vec<(f64, f64)> {
    vec![(-3.0, 6.0), (3.0, 9.0), (-3.0, 12.0), (3.0, 15.0), (-3.0, 18.0)]
}

pub fn table_iv_goals() -> Vec<(f64, f64)> {
    vec![
        (3.0, 3.0),
        (-3.0, 6.0),
        (3.0, 9.0),
        (-3.0, 12.0),
        (3.0, 15.0),
        (-3.0, 18.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::update_safety_zone;
    use proptest::prelude::*;

    fn input(tick: usize, zone: SafetyZone, planner: Command) -> TickInput {
        TickInput {
            tick,
            zone,
            planner,
            goal_reached: false,
            at_rest: false,
            trusted: Pose2::new(0.0, 0.0, 0.0),
        }
    }

    fn zone_at_ratio(ratio: f64) -> SafetyZone {
        let mut z = update_safety_zone((0.0, 0.0), (4.0, 3.0), 1.0).unwrap();
        z.e = ratio * z.o;
        z
    }

    fn sup() -> Supervisor {
        Supervisor::new(SupervisorConfig::default(), MotionLimits::default(), 1).unwrap()
    }

    #[test]
    fn nominal_passes_command_through() {
        let mut s = sup();
        let c = Command { v: 0.2, omega: 0.05 };
        assert_eq!(s.supervise(&input(0, zone_at_ratio(0.5), c)).0, c);
        assert_eq!(s.mode(), Mode::Nominal);
    }

    #[test]
    fn violation_brakes_on_the_same_tick() {
        let mut s = sup();
        s.supervise(&input(0, zone_at_ratio(0.5), Command { v: 0.2, omega: 0.0 }));
        let (c, ev) = s.supervise(&input(1, zone_at_ratio(1.0), Command { v: 0.25, omega: 0.0 }));
        assert!(ev.violation);
        assert_eq!(s.mode(), Mode::Braking);
        assert!((c.v - 0.195).abs() < 1e-15);
    }

    #[test]
    fn braking_from_point_two_takes_two_seconds() {
        let mut s = sup();
        s.state.last = Command { v: 0.2, omega: 0.0 };
        let mut ticks = 0;
        loop {
            let (c, _) = s.supervise(&input(ticks, zone_at_ratio(1.2), Command::default()));
            ticks += 1;
            if c.v == 0.0 {
                break;
            }
        }
        assert_eq!(ticks, 40);
        assert_eq!(s.mode(), Mode::ReturnToSafe);
    }

    #[test]
    fn latched_sequence_never_returns_to_nominal() {
        let mut s = sup();
        s.state.last = Command { v: 0.1, omega: 0.01 };
        let mut trusted = Pose2::new(0.0, 0.05, 0.0);
        let mut modes = vec![];
        for k in 0..200 {
            let mut inp = input(
                k,
                zone_at_ratio(if k == 0 { 1.1 } else { 0.1 }),
                Command { v: 0.25, omega: 0.1 },
            );
            inp.trusted = trusted;
            s.supervise(&inp);
            modes.push(s.mode());
            trusted.y *= 0.99;
        }
        let seq: Vec<Mode> = s.transitions().iter().map(|t| t.to).collect();
        assert_eq!(seq, vec![Mode::Braking, Mode::ReturnToSafe, Mode::Stopped]);
        assert!(modes.iter().all(|m| m.is_latched()));
    }

    #[test]
    fn return_to_safe_examples() {
        let cfg = SupervisorConfig::default();
        let lim = MotionLimits::default();
        let (c, done) = return_to_safe_command(&Pose2::new(0.0, 0.0, 0.3), &cfg, &lim);
        assert!(done);
        assert_eq!(c, Command::default());
        let (c, _) = return_to_safe_command(&Pose2::new(0.0, 18.0, -std::f64::consts::FRAC_PI_2), &cfg, &lim);
        assert!(c.omega.abs() < 1e-12);
        assert_eq!(c.v, lim.v_max);
        let (c, _) = return_to_safe_command(&Pose2::new(0.0, 18.0, 0.0), &cfg, &lim);
        assert!(c.v.abs() < 1e-12);
        assert_eq!(c.omega, lim.omega_min);
    }

    #[test]
    fn goal_reached_brakes_then_advances() {
        let mut s = Supervisor::new(SupervisorConfig::default(), MotionLimits::default(), 2).unwrap();
        s.state.last = Command { v: 0.01, omega: 0.0 };
        let mut inp = input(0, zone_at_ratio(0.3), Command { v: 0.25, omega: 0.0 });
        inp.goal_reached = true;
        let (c, ev) = s.supervise(&inp);
        assert!(ev.goal_reached);
        assert_eq!(s.mode(), Mode::GoalReached);
        assert!((c.v - 0.005).abs() < 1e-15);
        inp.goal_reached = false;
        s.supervise(&inp);
        inp.at_rest = true;
        let (_, ev) = s.supervise(&inp);
        assert!(ev.advanced);
        assert_eq!((s.mode(), s.state.goal_index), (Mode::Nominal, 1));
    }

    #[test]
    fn empty_sequence_is_done() {
        let s = Supervisor::new(SupervisorConfig::default(), MotionLimits::default(), 0).unwrap();
        assert!(s.state.sequence_done);
        assert!(s.active_goal(&[]).is_none());
    }

    #[test]
    fn goal_advance_examples() {
        let goals: Vec<GoalSpec> = table_iii_goals()
            .into_iter()
            .map(|(x, y)| GoalSpec::new(x, y, 0.1).unwrap())
            .collect();
        let mut idx = 0;
        for g in &goals {
            assert_eq!(
                advance_goal(&goals, idx, &Pose2::new(g.x + 0.05, g.y, 0.0)),
                Some(idx + 1)
            );
            idx += 1;
        }
        assert_eq!(idx, 5);
        assert_eq!(advance_goal(&goals, 0, &Pose2::new(0.0, 0.0, 0.0)), None);
        assert_eq!(advance_goal(&[], 0, &Pose2::new(0.0, 0.0, 0.0)), None);
    }

    #[test]
    fn faults_corrupt_deterministically() {
        let s = PoseSample {
            t: 1.0,
            x: 1.0,
            y: 2.0,
            theta: 0.0,
        };
        let mut f = FaultInjector::new(FaultEvent::offset_after_goal(0, 0.0, 0.0));
        f.arm(0, 0.0, 1);
        assert_eq!(f.apply(s), s);
        let mut f = FaultInjector::new(FaultEvent::offset_after_goal(4, 0.0, 10.0));
        f.arm(0, 0.0, 4);
        assert_eq!(f.apply(s), s);
        f.arm(1, 0.0, 5);
        assert_eq!(f.apply(s).y, 12.0);
        let mut fr = FaultInjector::new(FaultEvent {
            trigger: FaultTrigger::Time { t: 0.0 },
            fault: FaultKind::PoseFreeze,
        });
        fr.arm(0, 0.0, 0);
        fr.apply(s);
        let later = fr.apply(PoseSample { t: 2.0, x: 5.0, ..s });
        assert_eq!((later.t, later.x), (2.0, 1.0));
        let mut j = FaultInjector::new(FaultEvent {
            trigger: FaultTrigger::Time { t: 0.0 },
            fault: FaultKind::PoseJump { distance: 3.0 },
        });
        j.arm(0, 0.0, 0);
        assert_eq!(j.apply(s).x, 4.0);
    }

    #[test]
    fn offset_fault_violates_the_barrier() {
        // at the final goal of the first trial, a +10 m offset leaves the zone
        let mut z = SafetyZone::new((3.0, 15.0), (-3.0, 18.0), 1.5).unwrap();
        z.update(-3.0, 18.0);
        assert!(!z.violated());
        z.update(-3.0, 28.0);
        assert!(z.violated());
    }

    proptest! {
        #[test]
        fn near_barrier_respects_caps(ratio in 0.9f64..0.9999, v in -1.0f64..1.0, w in -1.0f64..1.0) {
            let mut s = sup();
            let (c, _) = s.supervise(&input(0, zone_at_ratio(ratio), Command { v, omega: w }));
            let scale = s.cfg.cap_scale(ratio);
            prop_assert_eq!(s.mode(), Mode::NearBarrier);
            prop_assert!(c.v.abs() <= 0.25 * scale + 1e-15);
            prop_assert!(c.omega.abs() <= 0.15 * scale + 1e-15);
        }

        #[test]
        fn braking_profile_is_reproducible(v in 0.0f64..0.25, w in -0.15f64..0.15) {
            let run = || {
                let mut s = sup();
                s.state.last = Command { v, omega: w };
                (0..80).map(|k| s.supervise(&input(k, zone_at_ratio(1.5), Command::default())).0).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
