//! Synthetic in-wheel actuator: `A·v̇ = u + F(v) + d`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one wheel actuator. `F(v) = -c1·v - c2·v|v| - c3·tanh(v/v_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Inertia-like gain `A`.
    pub inertia: f64,
    pub viscous: f64,
    pub quadratic: f64,
    pub coulomb: f64,
    /// Width of the smoothed Coulomb transition, m/s.
    pub coulomb_width: f64,
    pub wheel_radius: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 120.0,
            viscous: 40.0,
            quadratic: 15.0,
            coulomb: 25.0,
            coulomb_width: 0.02,
            wheel_radius: 0.4,
        }
    }
}

impl PlantParams {
    /// Purely viscous plant, `F(v) = -c·v`.
    pub fn linear(inertia: f64, viscous: f64) -> Self {
        Self {
            inertia,
            viscous,
            quadratic: 0.0,
            coulomb: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.inertia,
            self.viscous,
            self.quadratic,
            self.coulomb,
            self.coulomb_width,
            self.wheel_radius,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("plant parameter"));
        }
        if self.inertia <= 0.0 || self.wheel_radius <= 0.0 || self.coulomb_width <= 0.0 {
            return Err(Error::InvalidConfig(
                "plant inertia, wheel radius and Coulomb width must be positive".into(),
            ));
        }
        if self.viscous < 0.0 || self.quadratic < 0.0 || self.coulomb < 0.0 {
            return Err(Error::InvalidConfig(
                "friction coefficients must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn force(&self, v: f64) -> f64 {
        -self.viscous * v - self.quadratic * v * v.abs() - self.coulomb * (v / self.coulomb_width).tanh()
    }

    /// `dF/dv`, always `<= 0`.
    pub fn force_slope(&self, v: f64) -> f64 {
        let t = (v / self.coulomb_width).tanh();
        -self.viscous - 2.0 * self.quadratic * v.abs() - self.coulomb * (1.0 - t * t) / self.coulomb_width
    }

    /// Largest `|F|` over a speed range. `F` is monotone, so the ends decide.
    pub fn peak_force(&self, range: SpeedRange) -> f64 {
        self.force(range.lo).abs().max(self.force(range.hi).abs())
    }

    /// Input that produces acceleration `accel` at speed `v` on the
    /// undisturbed plant.
    pub fn inverse_at(&self, v: f64, accel: f64) -> f64 {
        self.inertia * accel - self.force(v)
    }
}

/// Closed interval of wheel rim speeds, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedRange {
    pub lo: f64,
    pub hi: f64,
}

impl SpeedRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite("speed range"));
        }
        if lo >= hi {
            return Err(Error::InvalidConfig(format!("empty speed range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn contains_range(&self, other: &SpeedRange) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }
}

/// Explicit Euler step of the wheel speed.
pub fn step_plant(v: f64, u: f64, disturbance: f64, params: &PlantParams, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    v + dt * (u + params.force(v) + disturbance) / params.inertia
}

/// One wheel with its current speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelPlant {
    pub params: PlantParams,
    pub v: f64,
}

impl WheelPlant {
    pub fn new(params: PlantParams, v0: f64) -> Self {
        Self { params, v: v0 }
    }

    pub fn step(&mut self, u: f64, disturbance: f64, dt: f64) -> f64 {
        self.v = step_plant(self.v, u, disturbance, &self.params, dt);
        self.v
    }
}

/// Exact inverse of the undisturbed discrete plant for a sampled reference.
/// Uses forward differences; the last sample reuses the previous slope.
pub fn ideal_inverse(v_d: &[f64], params: &PlantParams, dt: f64) -> Vec<f64> {
    let n = v_d.len();
    (0..n)
        .map(|k| {
            let accel = match n {
                0 | 1 => 0.0,
                _ if k + 1 < n => (v_d[k + 1] - v_d[k]) / dt,
                _ => (v_d[k] - v_d[k - 1]) / dt,
            };
            params.inverse_at(v_d[k], accel)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisturbanceModel {
    None,
    /// Constant `ratio · d*`, with `ratio` in `[-1, 1]`.
    ConstantRatio {
        ratio: f64,
    },
    /// Clamped Ornstein-Uhlenbeck process with standard deviation `d*/2`.
    Stochastic {
        corr_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    #[serde(flatten)]
    pub model: DisturbanceModel,
    /// Magnitude bound `d*`, control units.
    pub bound: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self {
            model: DisturbanceModel::None,
            bound: 0.0,
            seed: 0,
        }
    }

    pub fn stochastic(bound: f64, seed: u64) -> Self {
        Self {
            model: DisturbanceModel::Stochastic { corr_time: 0.25 },
            bound,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound.is_finite() && self.bound >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "disturbance bound {} must be >= 0",
                self.bound
            )));
        }
        match self.model {
            DisturbanceModel::None => {}
            DisturbanceModel::ConstantRatio { ratio } => {
                if !(-1.0..=1.0).contains(&ratio) {
                    return Err(Error::InvalidConfig(format!(
                        "disturbance ratio {ratio} outside [-1, 1]"
                    )));
                }
            }
            DisturbanceModel::Stochastic { corr_time } => {
                if !(corr_time > 0.0 && corr_time.is_finite()) {
                    return Err(Error::InvalidConfig("correlation time must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Realized bound; zero for the disturbance-free model.
    pub fn effective_bound(&self) -> f64 {
        match self.model {
            DisturbanceModel::None => 0.0,
            DisturbanceModel::ConstantRatio { ratio } => ratio.abs() * self.bound,
            DisturbanceModel::Stochastic { .. } => self.bound,
        }
    }
}

/// Sample path generator for one wheel.
#[derive(Debug, Clone)]
pub struct Disturbance {
    spec: DisturbanceSpec,
    rng: ChaCha8Rng,
    state: f64,
}

impl Disturbance {
    /// `stream` separates the wheels sharing one seed.
    pub fn new(spec: DisturbanceSpec, stream: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let state = match spec.model {
            DisturbanceModel::Stochastic { .. } => {
                let z: f64 = rng.sample(StandardNormal);
                (0.5 * spec.bound * z).clamp(-spec.bound, spec.bound)
            }
            _ => 0.0,
        };
        Ok(Self { spec, rng, state })
    }

    pub fn spec(&self) -> &DisturbanceSpec {
        &self.spec
    }

    /// Disturbance value for the next tick of length `dt`.
    pub fn sample(&mut self, dt: f64) -> f64 {
        match self.spec.model {
            DisturbanceModel::None => 0.0,
            DisturbanceModel::ConstantRatio { ratio } => ratio * self.spec.bound,
            DisturbanceModel::Stochastic { corr_time } => {
                let out = self.state;
                let a = (-dt / corr_time).exp();
                let z: f64 = self.rng.sample(StandardNormal);
                let sigma = 0.5 * self.spec.bound;
                self.state =
                    (a * self.state + (1.0 - a * a).sqrt() * sigma * z).clamp(-self.spec.bound, self.spec.bound);
                out
            }
        }
    }
}

/// Reference signal used to excite the actuator while recording data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Excitation {
    /// Triangular sweeps between the range ends.
    Ramps { period: f64 },
    /// Linear chirp around the range midpoint spanning the full range.
    Chirps { f_start: f64, f_end: f64 },
    /// Uniformly drawn levels held for a random time, approached at a
    /// bounded slew rate.
    RandomSteps { hold_min: f64, hold_max: f64, slew: f64 },
}

impl Excitation {
    fn name(&self) -> &'static str {
        match self {
            Excitation::Ramps { .. } => "ramps",
            Excitation::Chirps { .. } => "chirps",
            Excitation::RandomSteps { .. } => "random-steps",
        }
    }
}

/// What to record and over which speeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetRequest {
    pub excitation: Excitation,
    pub range: SpeedRange,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for DatasetRequest {
    fn default() -> Self {
        Self {
            excitation: Excitation::Ramps { period: 240.0 },
            range: SpeedRange { lo: -0.15, hi: 0.40 },
            duration: 1200.0,
            dt: 0.05,
            seed: 0,
        }
    }
}

/// Provenance stored next to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub excitation: Excitation,
    pub excitation_name: String,
    pub range: SpeedRange,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub samples: usize,
    pub plant: PlantParams,
}

/// Recorded `(v, u)` pairs of one actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorDataset {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub meta: DatasetMeta,
}

fn reference_signal(req: &DatasetRequest, n: usize) -> Result<Vec<f64>> {
    let r = req.range;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let out = match req.excitation {
        Excitation::Ramps { period } => {
            if !(period > 0.0) {
                return Err(Error::InvalidConfig("ramp period must be > 0".into()));
            }
            if req.duration < 0.5 * period {
                return Err(Error::Dataset(format!(
                    "duration {} s does not cover one sweep of {} s",
                    req.duration,
                    0.5 * period
                )));
            }
            (0..n)
                .map(|k| {
                    let phase = (k as f64 * req.dt / period).fract();
                    r.lo + r.width() * (1.0 - (1.0 - 2.0 * phase).abs())
                })
                .collect()
        }
        Excitation::Chirps { f_start, f_end } => {
            if !(f_start > 0.0 && f_end > 0.0) {
                return Err(Error::InvalidConfig("chirp frequencies must be > 0".into()));
            }
            let amp = 0.5 * r.width();
            let rate = (f_end - f_start) / req.duration;
            (0..n)
                .map(|k| {
                    let t = k as f64 * req.dt;
                    r.mid() - amp * (2.0 * PI * (f_start * t + 0.5 * rate * t * t)).cos()
                })
                .collect()
        }
        Excitation::RandomSteps {
            hold_min,
            hold_max,
            slew,
        } => {
            if !(hold_min > 0.0 && hold_max >= hold_min && slew > 0.0) {
                return Err(Error::InvalidConfig(
                    "random steps need 0 < hold_min <= hold_max and slew > 0".into(),
                ));
            }
            let mut out = Vec::with_capacity(n);
            let mut level = r.mid();
            let mut target = level;
            let mut hold_left = 0.0;
            let max_delta = slew * req.dt;
            for _ in 0..n {
                if hold_left <= 0.0 {
                    target = rng.random_range(r.lo..=r.hi);
                    hold_left = rng.random_range(hold_min..=hold_max);
                }
                level += (target - level).clamp(-max_delta, max_delta);
                hold_left -= req.dt;
                out.push(level);
            }
            out
        }
    };
    Ok(out)
}

/// Drives the undisturbed plant along an excitation reference using the
/// exact inverse and records the measured speed and applied input.
pub fn generate_dataset(req: &DatasetRequest, params: &PlantParams, operating: SpeedRange) -> Result<ActuatorDataset> {
    params.validate()?;
    if !(req.duration > 0.0) {
        return Err(Error::Dataset("duration must be positive".into()));
    }
    if !(req.dt > 0.0) {
        return Err(Error::InvalidConfig("dt must be positive".into()));
    }
    if !operating.contains_range(&req.range) {
        return Err(Error::Dataset(format!(
            "excitation range [{}, {}] leaves the operating range [{}, {}]",
            req.range.lo, req.range.hi, operating.lo, operating.hi
        )));
    }
    let n = (req.duration / req.dt).round() as usize;
    if n < 3 {
        return Err(Error::Dataset(format!("{n} samples cannot be split three ways")));
    }
    let reference = reference_signal(req, n + 1)?;
    let inputs = ideal_inverse(&reference, params, req.dt);
    let mut wheel = WheelPlant::new(*params, reference[0]);
    let mut v = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for &input in inputs.iter().take(n) {
        v.push(wheel.v);
        u.push(input);
        wheel.step(input, 0.0, req.dt);
    }
    if v.iter().chain(&u).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("recorded actuator sample"));
    }
    Ok(ActuatorDataset {
        v,
        u,
        meta: DatasetMeta {
            excitation: req.excitation,
            excitation_name: req.excitation.name().into(),
            range: req.range,
            duration: req.duration,
            dt: req.dt,
            seed: req.seed,
            samples: n,
            plant: *params,
        },
    })
}

/// Fraction of `width`-wide bins of `range` that contain at least one sample.
pub fn bin_coverage(samples: &[f64], range: SpeedRange, width: f64) -> f64 {
    let bins = (range.width() / width).round().max(1.0) as usize;
    let mut hit = vec![false; bins];
    for &v in samples {
        if range.contains(v) {
            let i = (((v - range.lo) / width) as usize).min(bins - 1);
            hit[i] = true;
        }
    }
    hit.iter().filter(|&&h| h).count() as f64 / bins as f64
}

#[derive(Serialize, Deserialize)]
struct Row {
    k: usize,
    v: f64,
    u: f64,
}

impl ActuatorDataset {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("meta.json")
    }

    /// Writes `k,v,u` rows plus the JSON sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        for (k, (&v, &u)) in self.v.iter().zip(&self.u).enumerate() {
            w.serialize(Row { k, v, u })?;
        }
        w.flush()?;
        fs::write(Self::sidecar_path(csv_path), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(csv_path: &Path) -> Result<Self> {
        let sidecar = Self::sidecar_path(csv_path);
        let bytes =
            fs::read(&sidecar).map_err(|e| Error::artifact(&sidecar, format!("cannot read dataset sidecar: {e}")))?;
        let meta: DatasetMeta = serde_json::from_slice(&bytes)
            .map_err(|e| Error::artifact(csv_path, format!("bad dataset sidecar: {e}")))?;
        let mut r = csv::Reader::from_path(csv_path)
            .map_err(|e| Error::artifact(csv_path, format!("cannot read dataset: {e}")))?;
        let (mut v, mut u) = (Vec::new(), Vec::new());
        for (expected, row) in r.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.k != expected {
                return Err(Error::artifact(csv_path, format!("row index {} out of order", row.k)));
            }
            if !(row.v.is_finite() && row.u.is_finite()) {
                return Err(Error::artifact(csv_path, format!("non-finite sample at k = {}", row.k)));
            }
            v.push(row.v);
            u.push(row.u);
        }
        if v.len() != meta.samples {
            return Err(Error::artifact(
                csv_path,
                format!("sidecar lists {} samples, file has {}", meta.samples, v.len()),
            ));
        }
        Ok(Self { v, u, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DT: f64 = 0.05;

    #[test]
    fn ideal_inverse_holds_constant_reference() {
        let p = PlantParams::default();
        let refs = vec![0.2; 400];
        let u = ideal_inverse(&refs, &p, DT);
        let mut w = WheelPlant::new(p, 0.2);
        for &ui in &u {
            w.step(ui, 0.0, DT);
            assert!((w.v - 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn free_frictionless_plant_keeps_speed() {
        let p = PlantParams::linear(120.0, 0.0);
        let mut w = WheelPlant::new(p, 0.13);
        for _ in 0..100 {
            w.step(0.0, 0.0, DT);
        }
        assert_eq!(w.v, 0.13);
    }

    #[test]
    fn constant_disturbance_offsets_linear_plant() {
        // A v' = u - c v + d with u = c v_d settles at v_d + d / c.
        let (a, c, d) = (120.0, 40.0, 2.0);
        let p = PlantParams::linear(a, c);
        let u = ideal_inverse(&[0.2, 0.2], &p, DT)[0];
        assert_relative_eq!(u, c * 0.2, epsilon = 1e-12);
        let mut w = WheelPlant::new(p, 0.2);
        for _ in 0..4000 {
            w.step(u, d, DT);
        }
        assert_relative_eq!(w.v - 0.2, d / c, epsilon = 1e-9);
    }

    #[test]
    fn zero_reference_needs_zero_input() {
        let u = ideal_inverse(&[0.0; 10], &PlantParams::default(), DT);
        assert!(u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ramp_inverse_carries_inertia_term() {
        let p = PlantParams::default();
        let refs: Vec<f64> = (0..50).map(|k| 0.01 * k as f64 * DT).collect();
        let u = ideal_inverse(&refs, &p, DT);
        for k in 0..49 {
            let fd = (refs[k + 1] - refs[k]) / DT;
            assert_relative_eq!(u[k] + p.force(refs[k]), p.inertia * fd, epsilon = 1e-10);
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = PlantParams::default();
        for &v in &[-0.14, -0.01, 0.0, 0.005, 0.1, 0.39] {
            let h = 1e-6;
            let fd = (p.force(v + h) - p.force(v - h)) / (2.0 * h);
            assert_relative_eq!(p.force_slope(v), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn peak_force_over_wheel_range() {
        let p = PlantParams::default();
        let peak = p.peak_force(SpeedRange { lo: -0.15, hi: 0.40 });
        let brute = (0..=5500)
            .map(|k| p.force(-0.15 + 1e-4 * k as f64).abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(peak, brute, max_relative = 1e-12);
    }

    #[test]
    fn ramp_dataset_covers_speed_range() {
        let p = PlantParams::default();
        let req = DatasetRequest::default();
        let ds = generate_dataset(&req, &p, req.range).unwrap();
        assert_eq!(ds.len(), 24_000);
        assert!(bin_coverage(&ds.v, req.range, 0.01) >= 0.95);
        for req in [
            DatasetRequest {
                excitation: Excitation::Chirps {
                    f_start: 0.002,
                    f_end: 0.02,
                },
                ..req
            },
            DatasetRequest {
                excitation: Excitation::RandomSteps {
                    hold_min: 5.0,
                    hold_max: 20.0,
                    slew: 0.02,
                },
                ..req
            },
        ] {
            let ds = generate_dataset(&req, &p, req.range).unwrap();
            assert!(ds
                .v
                .iter()
                .all(|&v| v >= req.range.lo - 1e-12 && v <= req.range.hi + 1e-12));
        }
    }

    #[test]
    fn dataset_requests_are_validated() {
        let p = PlantParams::default();
        let req = DatasetRequest::default();
        let zero = DatasetRequest { duration: 0.0, ..req };
        assert!(matches!(generate_dataset(&zero, &p, req.range), Err(Error::Dataset(_))));
        let wide = DatasetRequest {
            range: SpeedRange { lo: -0.3, hi: 0.4 },
            ..req
        };
        assert!(matches!(generate_dataset(&wide, &p, req.range), Err(Error::Dataset(_))));
    }

    #[test]
    fn dataset_is_seed_deterministic_and_round_trips() {
        let p = PlantParams::default();
        let req = DatasetRequest {
            excitation: Excitation::RandomSteps {
                hold_min: 2.0,
                hold_max: 8.0,
                slew: 0.05,
            },
            duration: 60.0,
            seed: 9,
            ..DatasetRequest::default()
        };
        let a = generate_dataset(&req, &p, req.range).unwrap();
        let b = generate_dataset(&req, &p, req.range).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        a.save(&path).unwrap();
        assert_eq!(ActuatorDataset::load(&path).unwrap(), a);
    }

    #[test]
    fn stochastic_disturbance_is_reproducible_per_stream() {
        let spec = DisturbanceSpec::stochastic(3.0, 4);
        let run = |stream| {
            let mut d = Disturbance::new(spec, stream).unwrap();
            (0..200).map(|_| d.sample(DT)).collect::<Vec<_>>()
        };
        assert_eq!(run(0), run(0));
        assert_ne!(run(0), run(1));
    }

    proptest! {
        #[test]
        fn disturbance_respects_bound(bound in 0.0f64..50.0, seed in any::<u64>(), corr in 0.01f64..5.0, ratio in -1.0f64..=1.0) {
            let specs = [
                DisturbanceSpec { model: DisturbanceModel::Stochastic { corr_time: corr }, bound, seed },
                DisturbanceSpec { model: DisturbanceModel::ConstantRatio { ratio }, bound, seed },
            ];
            for spec in specs {
                let mut d = Disturbance::new(spec, 2).unwrap();
                for _ in 0..500 {
                    prop_assert!(d.sample(DT).abs() <= bound);
                }
            }
        }

        #[test]
        fn plant_stays_finite_for_bounded_inputs(v0 in -0.2f64..0.5, inputs in proptest::collection::vec(-80.0f64..80.0, 1..400)) {
            let mut w = WheelPlant::new(PlantParams::default(), v0);
            for u in inputs {
                prop_assert!(w.step(u, 0.0, DT).is_finite());
            }
        }
    }

    #[test]
    fn inverse_tracking_error_shrinks_with_dt() {
        // Drive the plant with the continuous-time inverse sampled at each
        // step; the Euler mismatch is first order in dt.
        let p = PlantParams::default();
        let reference = |t: f64| 0.12 + 0.1 * (0.3 * t).sin();
        let slope = |t: f64| 0.03 * (0.3 * t).cos();
        let err = |dt: f64| {
            let n = (20.0 / dt) as usize;
            let mut v = reference(0.0);
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let t = k as f64 * dt;
                let u = p.inverse_at(reference(t), slope(t));
                v = step_plant(v, u, 0.0, &p, dt);
                worst = worst.max((v - reference(t + dt)).abs());
            }
            worst
        };
        let (e1, e2) = (err(0.05), err(0.025));
        assert!(e2 < 0.6 * e1, "{e1} -> {e2}");
    }
}
