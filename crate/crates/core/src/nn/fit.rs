use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::network::{Activation, MinMax, NetworkModel};
use super::scg::{ScgParams, ScgState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.34,
            val: 0.33,
            test: 0.33,
        }
    }
}

/// Index sets of a seeded random partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(*f > 0.0)) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "split fractions must be positive and sum to 1".into(),
            ));
        }
        Ok(())
    }

    pub fn split(&self, n: usize, seed: u64) -> Result<Split> {
        self.validate()?;
        if n < 3 {
            return Err(Error::Dataset(format!("{n} samples cannot be split three ways")));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((self.train * n as f64).round() as usize).clamp(1, n - 2);
        let n_val = ((self.val * n as f64).round() as usize).clamp(1, n - 1 - n_train);
        let test = idx.split_off(n_train + n_val);
        let val = idx.split_off(n_train);
        Ok(Split { train: idx, val, test })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub hidden: Vec<usize>,
    pub split: SplitFractions,
    /// Stop once the training loss reaches this value.
    pub goal: f64,
    /// Stop once the gradient norm falls to this value.
    pub min_grad: f64,
    pub max_epochs: usize,
    /// Consecutive epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub scg: ScgParams,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            hidden: vec![320, 210, 105],
            split: SplitFractions::default(),
            goal: 1e-6,
            min_grad: 1e-10,
            max_epochs: 500,
            patience: 6,
            seed: 0,
            scg: ScgParams::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.scg.validate()?;
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden layer widths must be non-empty and positive".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be at least 1".into()));
        }
        if !(self.goal >= 0.0 && self.min_grad >= 0.0) {
            return Err(Error::InvalidConfig("goal and min_grad must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Goal,
    MinGradient,
    ValidationPatience,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub grad_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop: StopReason,
    /// Test error in normalized output units.
    pub test_mse: f64,
    /// Test error in physical units.
    pub test_mse_physical: f64,
    pub test_target_variance: f64,
    /// `test_mse_physical / test_target_variance`, absent for a constant target.
    pub relative_test_mse: Option<f64>,
    pub degenerate_target: bool,
    pub training_hash: String,
}

fn gather(data: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| data[i]).collect()
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// SHA-256 over the fit settings and the exact sample bytes.
pub fn training_hash(cfg: &FitConfig, v: &[f64], u: &[f64]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg)?);
    for x in v.iter().chain(u) {
        h.update(x.to_le_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Fits the inverse map `v -> u`. Returns the validation-best network.
pub fn fit(v: &[f64], u: &[f64], cfg: &FitConfig) -> Result<(NetworkModel, TrainReport)> {
    cfg.validate()?;
    if v.len() != u.len() {
        return Err(Error::Dataset(format!("{} speeds vs {} inputs", v.len(), u.len())));
    }
    if v.iter().chain(u).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("training samples"));
    }
    let split = cfg.split.split(v.len(), cfg.seed)?;
    let degenerate_target = MinMax::is_degenerate_fit(u);
    let mut net = NetworkModel::new(&cfg.hidden, Activation::Tanh, MinMax::fit(v)?, MinMax::fit(u)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    net.init_glorot(&mut rng);

    let train = net.batch(&gather(v, &split.train), &gather(u, &split.train))?;
    let val = net.batch(&gather(v, &split.val), &gather(u, &split.val))?;
    let test_u = gather(u, &split.test);
    let test = net.batch(&gather(v, &split.test), &test_u)?;

    let mut objective = |p: &[f64]| net.loss_grad_at(p, &train);
    let mut state = ScgState::new(net.params().to_vec(), cfg.scg, &mut objective)?;
    let mut best = state.x.clone();
    let mut best_val = net.loss_at(&best, &val)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs = Vec::with_capacity(cfg.max_epochs);
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        if state.loss <= cfg.goal {
            stop = StopReason::Goal;
            break;
        }
        if state.grad_norm() <= cfg.min_grad {
            stop = StopReason::MinGradient;
            break;
        }
        let out = state.step(&mut objective)?;
        let val_loss = if out.accepted {
            net.loss_at(&state.x, &val)?
        } else {
            epochs.last().map_or(best_val, |e: &EpochRecord| e.val_loss)
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss: out.loss,
            val_loss,
            grad_norm: out.grad_norm,
            accepted: out.accepted,
        });
        if !out.accepted {
            continue;
        }
        if val_loss < best_val {
            best_val = val_loss;
            best.clone_from(&state.x);
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stop = StopReason::ValidationPatience;
                break;
            }
        }
    }
    if stop == StopReason::MaxEpochs {
        if state.loss <= cfg.goal {
            stop = StopReason::Goal;
        } else if state.grad_norm() <= cfg.min_grad {
            stop = StopReason::MinGradient;
        }
    }

    net.set_params(&best);
    let test_mse = net.loss(&test)?;
    let gain = net.output_norm.gain();
    let test_mse_physical = test_mse * gain * gain;
    let test_target_variance = variance(&test_u);
    let relative_test_mse = (test_target_variance > 0.0).then(|| test_mse_physical / test_target_variance);
    let report = TrainReport {
        n_train: split.train.len(),
        n_val: split.val.len(),
        n_test: split.test.len(),
        epochs,
        best_epoch,
        best_val_loss: best_val,
        stop,
        test_mse,
        test_mse_physical,
        test_target_variance,
        relative_test_mse,
        degenerate_target,
        training_hash: training_hash(cfg, v, u)?,
    };
    Ok((net, report))
}

pub const MODEL_FORMAT: &str = "goalreach-inverse-model";
pub const MODEL_VERSION: u32 = 1;

/// On-disk form of a trained inverse model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub input_norm: MinMax,
    pub output_norm: MinMax,
    pub params: Vec<f64>,
    pub training_hash: String,
}

impl ModelFile {
    pub fn from_model(net: &NetworkModel, training_hash: &str) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            sizes: net.sizes().to_vec(),
            activation: net.activation(),
            input_norm: net.input_norm,
            output_norm: net.output_norm,
            params: net.params().to_vec(),
            training_hash: training_hash.into(),
        }
    }

    pub fn into_model(self) -> Result<NetworkModel> {
        NetworkModel::from_parts(
            self.sizes,
            self.params,
            self.activation,
            self.input_norm,
            self.output_norm,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::artifact(path, format!("cannot read model file: {e}")))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::artifact(path, format!("unreadable model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::artifact(path, format!("unexpected format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::artifact(
                path,
                format!("unsupported model version {}", file.version),
            ));
        }
        if file.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::artifact(path, "non-finite parameter"));
        }
        Ok(file)
    }
}
