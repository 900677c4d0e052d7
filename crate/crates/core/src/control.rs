//! Per-wheel robust adaptive control around the learned inverse model,
//! the safety-zone barrier, skid-steer allocation and Lyapunov diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wheel order used everywhere: front-left, rear-left, front-right, rear-right.
pub const WHEELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleGeometry {
    pub track_width: f64,
    pub wheel_radius: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self {
            track_width: 2.0,
            wheel_radius: 0.4,
        }
    }
}

impl VehicleGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.track_width > 0.0 && self.wheel_radius > 0.0) {
            return Err(Error::InvalidConfig(
                "track width and wheel radius must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Body speed and turn rate to the four wheel speed references.
pub fn allocate_wheel_refs(v: f64, omega: f64, geom: &VehicleGeometry) -> [f64; WHEELS] {
    let half = 0.5 * omega * geom.track_width;
    let (left, right) = (v - half, v + half);
    [left, left, right, right]
}

/// Body speed and turn rate implied by the four wheel speeds.
pub fn body_from_wheels(w: &[f64; WHEELS], geom: &VehicleGeometry) -> (f64, f64) {
    let left = 0.5 * (w[0] + w[1]);
    let right = 0.5 * (w[2] + w[3]);
    (0.5 * (left + right), (right - left) / geom.track_width)
}

/// Circle around the midpoint of a segment's start and goal. Positions are
/// relative to the segment start, which is treated as the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyZone {
    /// Distance from the robot to the segment midpoint, m.
    pub e: f64,
    /// Allowed radius, m.
    pub o: f64,
    pub zeta: f64,
    /// Segment start in world coordinates.
    pub anchor: (f64, f64),
    /// Segment goal in world coordinates.
    pub goal: (f64, f64),
}

impl SafetyZone {
    pub fn new(anchor: (f64, f64), goal: (f64, f64), zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidConfig(format!("safety offset {zeta} must be positive")));
        }
        let rel = (goal.0 - anchor.0, goal.1 - anchor.1);
        let o = zeta + 0.5 * rel.0.hypot(rel.1);
        Ok(Self {
            e: 0.5 * rel.0.hypot(rel.1),
            o,
            zeta,
            anchor,
            goal,
        })
    }

    /// Recomputes `E` for a world-frame position.
    pub fn update(&mut self, x: f64, y: f64) {
        let (px, py) = (x - self.anchor.0, y - self.anchor.1);
        let (mx, my) = (0.5 * (self.goal.0 - self.anchor.0), 0.5 * (self.goal.1 - self.anchor.1));
        self.e = (px - mx).hypot(py - my);
    }

    pub fn ratio(&self) -> f64 {
        self.e / self.o
    }

    pub fn violated(&self) -> bool {
        !(self.e < self.o)
    }
}

/// Zone for a position and goal both already expressed relative to the
/// segment start.
pub fn update_safety_zone(pose: (f64, f64), goal: (f64, f64), zeta: f64) -> Result<SafetyZone> {
    let mut z = SafetyZone::new((0.0, 0.0), goal, zeta)?;
    z.update(pose.0, pose.1);
    Ok(z)
}

/// `log²(O / (O − E))`, or a barrier violation once `E ≥ O`.
pub fn barrier_gain(zone: &SafetyZone) -> Result<f64> {
    if zone.violated() || !zone.e.is_finite() {
        return Err(Error::BarrierViolation { e: zone.e, o: zone.o });
    }
    let l = (zone.o / (zone.o - zone.e)).ln();
    Ok(l * l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Analysis constant for the stability bound; not used by the controller.
    pub kappa: f64,
    pub chi0: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            gamma: 0.01,
            delta: 0.2,
            kappa: 0.5,
            chi0: 0.1,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let all = [self.epsilon, self.gamma, self.delta, self.kappa, self.chi0];
        if all.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig("controller gains must be positive".into()));
        }
        if !(self.epsilon > self.kappa) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must exceed kappa {}",
                self.epsilon, self.kappa
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelLoopState {
    /// Tracking error `v − v_d`, m/s.
    pub e: f64,
    pub chi_hat: f64,
    pub u: f64,
}

impl WheelLoopState {
    pub fn new(gains: &ControllerGains) -> Self {
        Self {
            e: 0.0,
            chi_hat: gains.chi0,
            u: 0.0,
        }
    }
}

/// One control tick for one wheel. Returns the input and the advanced loop
/// state; the adaptive gain is stepped with explicit Euler.
pub fn control_step(
    state: &WheelLoopState,
    v: f64,
    v_d: f64,
    u_idm: f64,
    zone: &SafetyZone,
    gains: &ControllerGains,
    dt: f64,
) -> Result<(f64, WheelLoopState)> {
    let barrier = barrier_gain(zone)?;
    control_step_with_gain(state, v, v_d, u_idm, barrier, gains, dt)
}

/// [`control_step`] with the barrier factor supplied directly. A zero factor
/// gives the barrier-free law used once the supervisor has latched.
pub fn control_step_with_gain(
    state: &WheelLoopState,
    v: f64,
    v_d: f64,
    u_idm: f64,
    barrier: f64,
    gains: &ControllerGains,
    dt: f64,
) -> Result<(f64, WheelLoopState)> {
    if !(dt > 0.0) || gains.delta * dt >= 1.0 {
        return Err(Error::Contract(format!("control step dt = {dt} outside (0, 1/delta)")));
    }
    if !(v.is_finite() && v_d.is_finite() && u_idm.is_finite() && barrier >= 0.0) {
        return Err(Error::NonFinite("wheel loop signal"));
    }
    let e = v - v_d;
    let u = u_idm - 0.5 * gains.epsilon * e - gains.gamma * e * barrier * state.chi_hat;
    let chi_dot = -gains.delta * state.chi_hat + gains.gamma * e * e * barrier;
    let next = WheelLoopState {
        e,
        chi_hat: state.chi_hat + dt * chi_dot,
        u,
    };
    Ok((u, next))
}

/// Constants of the dissipation inequality `dV/dt ≤ −μ V + ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    pub mu: f64,
    pub ell: f64,
}

impl StabilityBound {
    /// Built from per-wheel inertia and disturbance bound, shared gains.
    pub fn new(gains: &ControllerGains, inertia: &[f64; WHEELS], d_star: &[f64; WHEELS]) -> Result<Self> {
        gains.validate()?;
        let margin = gains.epsilon - gains.kappa;
        let mu = inertia.iter().map(|a| margin / a).fold(gains.delta, f64::min);
        let ell = d_star.iter().map(|d| d * d / (2.0 * gains.kappa)).sum();
        Ok(Self { mu, ell })
    }

    pub fn ultimate(&self) -> f64 {
        self.ell / self.mu
    }

    pub fn envelope(&self, v0: f64, t: f64) -> f64 {
        v0 * (-self.mu * t).exp() + self.ultimate()
    }
}

/// `Σ A/2 e² + ½ χ̂²`.
pub fn lyapunov_value(inertia: &[f64; WHEELS], loops: &[WheelLoopState; WHEELS]) -> f64 {
    inertia
        .iter()
        .zip(loops)
        .map(|(a, l)| 0.5 * a * l.e * l.e + 0.5 * l.chi_hat * l.chi_hat)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub value: f64,
    /// Backward-difference rate estimate; zero at the first sample.
    pub rate: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub bound: StabilityBound,
    pub samples: Vec<LyapunovSample>,
    /// Largest `value / envelope` over the run.
    pub worst_envelope_ratio: f64,
    pub within_envelope: bool,
    /// Samples where the finite-difference rate exceeds `−μ V + ℓ`.
    pub dissipation_violations: usize,
    /// Least-squares decay rate of `ln V` and its coefficient of determination.
    pub log_fit_rate: f64,
    pub log_fit_r2: f64,
}

/// Evaluates the Lyapunov function over a sampled four-wheel trajectory.
pub fn lyapunov_diagnostics(
    loops: &[[WheelLoopState; WHEELS]],
    inertia: &[f64; WHEELS],
    bound: StabilityBound,
    dt: f64,
) -> Result<LyapunovReport> {
    if loops.is_empty() || !(dt > 0.0) {
        return Err(Error::Contract("diagnostics need samples and dt > 0".into()));
    }
    let values: Vec<f64> = loops.iter().map(|l| lyapunov_value(inertia, l)).collect();
    let v0 = values[0];
    let mut samples = Vec::with_capacity(values.len());
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for (k, &value) in values.iter().enumerate() {
        let t = k as f64 * dt;
        let envelope = bound.envelope(v0, t);
        let rate = if k == 0 { 0.0 } else { (value - values[k - 1]) / dt };
        if k > 0 && rate > -bound.mu * values[k - 1] + bound.ell + 1e-12 * values[k - 1].max(1.0) {
            violations += 1;
        }
        if envelope > 0.0 {
            worst = worst.max(value / envelope);
        } else if value > 0.0 {
            worst = f64::INFINITY;
        }
        samples.push(LyapunovSample {
            t,
            value,
            rate,
            envelope,
        });
    }
    let (log_fit_rate, log_fit_r2) = log_linear_fit(&values, dt);
    Ok(LyapunovReport {
        bound,
        samples,
        worst_envelope_ratio: worst,
        within_envelope: worst <= 1.0,
        dissipation_violations: violations,
        log_fit_rate,
        log_fit_r2,
    })
}

/// Fits `ln V = c − r t` over the strictly positive samples.
fn log_linear_fit(values: &[f64], dt: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (k as f64 * dt, v.ln()))
        .collect();
    if pts.len() < 3 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let sty = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>();
    let syy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    let slope = sty / stt;
    let r2 = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    (-slope, r2)
}
