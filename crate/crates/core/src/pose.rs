//! Pose sources standing in for a localization front end.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_pi_unchecked, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PoseSample {
    pub fn from_pose(t: f64, p: &Pose2) -> Self {
        Self {
            t,
            x: p.x,
            y: p.y,
            theta: wrap_pi_unchecked(p.theta),
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub position_sigma: f64,
    pub heading_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            position_sigma: 0.0,
            heading_sigma: 0.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.position_sigma >= 0.0 && self.heading_sigma >= 0.0) {
            return Err(Error::InvalidConfig("pose noise sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

/// Which pose source a scenario uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PoseSource {
    #[default]
    GroundTruth,
    Noisy(NoiseSpec),
    Replay {
        path: String,
    },
}

/// Time-ordered pose log with zero-order-hold lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseLog {
    samples: Vec<PoseSample>,
}

impl PoseLog {
    pub fn new(samples: Vec<PoseSample>) -> Result<Self> {
        for s in &samples {
            if ![s.t, s.x, s.y, s.theta].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("pose log sample"));
            }
            if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&s.theta) {
                return Err(Error::Dataset(format!("heading {} outside [-pi, pi)", s.theta)));
            }
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Dataset("pose log timestamps must be strictly increasing".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[PoseSample] {
        &self.samples
    }

    /// Latest sample at or before `t`.
    pub fn at(&self, t: f64) -> Result<PoseSample> {
        let first = self.samples.first().ok_or(Error::StreamExhausted(t))?;
        let last = self.samples.last().expect("non-empty");
        if t < first.t || t > last.t {
            return Err(Error::StreamExhausted(t));
        }
        let k = self.samples.partition_point(|s| s.t <= t);
        Ok(self.samples[k - 1])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let samples = r.deserialize().collect::<std::result::Result<Vec<PoseSample>, _>>()?;
        Self::new(samples)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::artifact(path, format!("cannot open pose log: {e}")))?;
        Self::read_csv(f)
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum PoseProvider {
    GroundTruth,
    Noisy {
        spec: NoiseSpec,
        rng: ChaCha8Rng,
        pos: Normal<f64>,
        head: Normal<f64>,
    },
    Replay(PoseLog),
}

impl PoseProvider {
    pub fn noisy(spec: NoiseSpec) -> Result<Self> {
        spec.validate()?;
        Ok(PoseProvider::Noisy {
            spec,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            pos: Normal::new(0.0, spec.position_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            head: Normal::new(0.0, spec.heading_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?,
        })
    }

    pub fn from_source(src: &PoseSource, base: &Path) -> Result<Self> {
        match src {
            PoseSource::GroundTruth => Ok(PoseProvider::GroundTruth),
            PoseSource::Noisy(spec) => Self::noisy(*spec),
            PoseSource::Replay { path } => Ok(PoseProvider::Replay(PoseLog::load(&base.join(path))?)),
        }
    }

    /// Pose reported at time `t` given the simulator's true pose.
    pub fn sample(&mut self, t: f64, truth: &Pose2) -> Result<PoseSample> {
        match self {
            PoseProvider::GroundTruth => Ok(PoseSample::from_pose(t, truth)),
            PoseProvider::Noisy { spec, rng, pos, head } => {
                if spec.position_sigma == 0.0 && spec.heading_sigma == 0.0 {
                    return Ok(PoseSample::from_pose(t, truth));
                }
                let (dx, dy, dth) = (pos.sample(rng), pos.sample(rng), head.sample(rng));
                Ok(PoseSample::from_pose(
                    t,
                    &Pose2::new(truth.x + dx, truth.y + dy, truth.theta + dth),
                ))
            }
            PoseProvider::Replay(log) => log.at(t),
        }
    }
}
