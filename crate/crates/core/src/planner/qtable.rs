use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::actions::ActionGrid;
use super::discretize::DiscretizerSpec;
use super::reward::{RewardWeights, TerminalCause};
use super::train::{TrainConfig, UpdateRule};
use crate::error::{Error, Result};

pub const QTABLE_FORMAT: &str = "goalreach-qtable";
pub const QTABLE_VERSION: u32 = 1;

/// Dense `|S| x |A|` action-value table, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    spec: DiscretizerSpec,
    grid: ActionGrid,
    values: Vec<f64>,
}

/// One TD sample. `next_action` is required by SARSA on non-terminal steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub next_action: Option<usize>,
    pub terminal: Option<TerminalCause>,
}

impl QTable {
    pub fn new(spec: DiscretizerSpec, grid: ActionGrid) -> Result<Self> {
        spec.validate()?;
        if grid.is_empty() {
            return Err(Error::InvalidConfig("empty action grid".into()));
        }
        let values = vec![0.0; spec.n_states() * grid.len()];
        Ok(Self { spec, grid, values })
    }

    pub fn spec(&self) -> &DiscretizerSpec {
        &self.spec
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    pub fn n_states(&self) -> usize {
        self.spec.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.grid.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions() + action]
    }

    #[inline]
    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        let n = self.n_actions();
        self.values[state * n + action] = value;
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[f64] {
        let n = self.n_actions();
        &self.values[state * n..(state + 1) * n]
    }

    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (k, &q) in row.iter().enumerate().skip(1) {
            if q > row[best] {
                best = k;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Hash of the discretizer and action grid; a saved table is only valid
    /// against the same state/action layout.
    pub fn layout_hash(&self) -> String {
        layout_hash(&self.spec, &self.grid)
    }
}

pub fn layout_hash(spec: &DiscretizerSpec, grid: &ActionGrid) -> String {
    let bytes = serde_json::to_vec(&(spec, grid)).expect("layout serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Applies one temporal-difference update and returns the new `Q(s, a)`.
/// Terminal transitions bootstrap from zero.
pub fn td_update(q: &mut QTable, rec: &TransitionRecord, cfg: &TrainConfig) -> Result<f64> {
    if rec.state >= q.n_states()
        || rec.next_state >= q.n_states()
        || rec.action >= q.n_actions()
        || rec.next_action.is_some_and(|a| a >= q.n_actions())
    {
        return Err(Error::Contract(format!("transition indices out of range: {rec:?}")));
    }
    let bootstrap = match (rec.terminal, cfg.rule) {
        (Some(_), _) => 0.0,
        (None, UpdateRule::QLearning) => q.max_value(rec.next_state),
        (None, UpdateRule::Sarsa) => {
            let a_next = rec
                .next_action
                .ok_or_else(|| Error::Contract("SARSA update on a non-terminal step needs the next action".into()))?;
            q.get(rec.next_state, a_next)
        }
    };
    let current = q.get(rec.state, rec.action);
    let delta = rec.reward + cfg.gamma * bootstrap - current;
    let updated = current + cfg.alpha * delta;
    q.set(rec.state, rec.action, updated);
    Ok(updated)
}

#[derive(Serialize, Deserialize)]
struct QTableFile {
    format: String,
    version: u32,
    layout_hash: String,
    spec: DiscretizerSpec,
    grid: ActionGrid,
    weights: RewardWeights,
    train: TrainConfig,
    values: Vec<f64>,
}

/// A trained table together with the reward and training settings it was
/// produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerArtifact {
    pub table: QTable,
    pub weights: RewardWeights,
    pub train: TrainConfig,
}

impl PlannerArtifact {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = QTableFile {
            format: QTABLE_FORMAT.into(),
            version: QTABLE_VERSION,
            layout_hash: self.table.layout_hash(),
            spec: self.table.spec,
            grid: self.table.grid.clone(),
            weights: self.weights,
            train: self.train.clone(),
            values: self.table.values.clone(),
        };
        fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::artifact(path, format!("cannot read Q-table: {e}")))?;
        let file: QTableFile =
            serde_json::from_slice(&bytes).map_err(|e| Error::artifact(path, format!("not a Q-table file: {e}")))?;
        if file.format != QTABLE_FORMAT || file.version != QTABLE_VERSION {
            return Err(Error::artifact(
                path,
                format!("unsupported format {} v{}", file.format, file.version),
            ));
        }
        let expected = layout_hash(&file.spec, &file.grid);
        if expected != file.layout_hash {
            return Err(Error::artifact(path, "layout hash mismatch"));
        }
        let mut table = QTable::new(file.spec, file.grid)?;
        if file.values.len() != table.values.len() {
            return Err(Error::artifact(
                path,
                format!("expected {} values, found {}", table.values.len(), file.values.len()),
            ));
        }
        if file.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::artifact(path, "non-finite Q value"));
        }
        table.values = file.values;
        Ok(Self {
            table,
            weights: file.weights,
            train: file.train,
        })
    }
}
