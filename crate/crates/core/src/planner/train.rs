use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::PlannerEnv;
use super::policy::Phase;
use super::qtable::QTable;
use super::reward::TerminalCause;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    #[serde(alias = "q-learning")]
    QLearning,
    Sarsa,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qlearning" | "q-learning" => Ok(UpdateRule::QLearning),
            "sarsa" => Ok(UpdateRule::Sarsa),
            other => Err(Error::InvalidConfig(format!("unknown update rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub eps_0: f64,
    pub eps_final: f64,
    pub rule: UpdateRule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.10,
            gamma: 0.95,
            episodes: 30_000,
            eval_episodes: 1000,
            eps_0: 1.0,
            eps_final: 1e-3,
            rule: UpdateRule::QLearning,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma = {} not in (0, 1)", self.gamma)));
        }
        if !(self.eps_0 > 0.0 && self.eps_0 <= 1.0 && self.eps_final > 0.0 && self.eps_final <= self.eps_0) {
            return Err(Error::InvalidConfig("need 0 < eps_final <= eps_0 <= 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be > 0".into()));
        }
        Ok(())
    }

    /// Exponential decay from `eps_0` at the first episode to `eps_final` at the last.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.eps_0;
        }
        let frac = episode.min(self.episodes - 1) as f64 / (self.episodes - 1) as f64;
        self.eps_0 * (self.eps_final / self.eps_0).powf(frac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub epsilon: f64,
    pub total_return: f64,
    pub final_distance: f64,
    pub steps: usize,
    pub success: bool,
}

/// Trains a fresh table on `env`. Strictly sequential and seeded.
pub fn train(env: &PlannerEnv, cfg: &TrainConfig) -> Result<(QTable, Vec<CurvePoint>)> {
    cfg.validate()?;
    let mut q = env.new_table()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut curve = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let eps = cfg.epsilon_at(episode);
        let out = env.run_episode(&mut q, cfg, Phase::Train, eps, &mut rng, false)?;
        curve.push(CurvePoint {
            episode,
            epsilon: eps,
            total_return: out.total_return,
            final_distance: out.final_distance,
            steps: out.steps,
            success: out.cause == TerminalCause::Goal,
        });
    }
    Ok((q, curve))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_final_distance: f64,
    pub mean_length: f64,
    pub timeouts: usize,
    pub exits: usize,
}

/// Greedy (ε = 0) evaluation with eval-phase shaping; the table is not modified.
pub fn evaluate_greedy(env: &PlannerEnv, q: &QTable, episodes: usize, seed: u64) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::InvalidConfig("evaluation needs at least one episode".into()));
    }
    let mut table = q.clone();
    let cfg = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ok, mut dist, mut len, mut timeouts, mut exits) = (0usize, 0.0, 0.0, 0usize, 0usize);
    for _ in 0..episodes {
        let out = env.run_episode(&mut table, &cfg, Phase::Eval, 0.0, &mut rng, false)?;
        match out.cause {
            TerminalCause::Goal => ok += 1,
            TerminalCause::Timeout => timeouts += 1,
            TerminalCause::OutOfWorkspace => exits += 1,
        }
        dist += out.final_distance;
        len += out.steps as f64;
    }
    let n = episodes as f64;
    Ok(EvalSummary {
        episodes,
        success_rate: ok as f64 / n,
        mean_final_distance: dist / n,
        mean_length: len / n,
        timeouts,
        exits,
    })
}

pub fn write_curve_csv<W: Write>(out: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "epsilon", "return", "final_distance", "steps", "success"])?;
    for p in curve {
        w.write_record([
            p.episode.to_string(),
            p.epsilon.to_string(),
            p.total_return.to_string(),
            p.final_distance.to_string(),
            p.steps.to_string(),
            u8::from(p.success).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epsilon_schedule_endpoints() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epsilon_at(0), 1.0);
        assert_relative_eq!(cfg.epsilon_at(cfg.episodes - 1), 1e-3, epsilon = 1e-15);
        assert!(cfg.epsilon_at(15_000) < cfg.epsilon_at(14_999));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let bad = TrainConfig {
            gamma: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            alpha: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("sarsa".parse::<UpdateRule>().unwrap(), UpdateRule::Sarsa);
        assert_eq!("qlearning".parse::<UpdateRule>().unwrap(), UpdateRule::QLearning);
        assert!("td3".parse::<UpdateRule>().is_err());
    }
}
