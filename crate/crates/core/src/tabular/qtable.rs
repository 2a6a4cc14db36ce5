use serde::{Deserialize, Serialize};

use super::divergence::DivergenceSpec;
use super::model::TabularModel;
use super::simplex::max_policy_f;
use crate::error::{Error, Result};

/// Q(s, a) and visit counts, stored flat by state then action index.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn zeros(model: &TabularModel) -> Self {
        let offsets = model.offsets().to_vec();
        let pairs = model.pair_count();
        Self { offsets, values: vec![0.0; pairs], visits: vec![0; pairs] }
    }

    pub fn state_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn slot(&self, s: usize, a: usize) -> Result<usize> {
        if s >= self.state_count() {
            return Err(Error::StateIndex { index: s, count: self.state_count() });
        }
        let count = self.offsets[s + 1] - self.offsets[s];
        if a >= count {
            return Err(Error::UnknownAction { index: a, count });
        }
        Ok(self.offsets[s] + a)
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[self.offsets[s]..self.offsets[s + 1]]
    }

    pub fn get(&self, s: usize, a: usize) -> Result<f64> {
        Ok(self.values[self.slot(s, a)?])
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) -> Result<()> {
        let i = self.slot(s, a)?;
        self.values[i] = value;
        Ok(())
    }

    pub fn visits(&self, s: usize, a: usize) -> Result<u64> {
        Ok(self.visits[self.slot(s, a)?])
    }

    pub(crate) fn bump_visits(&mut self, s: usize, a: usize) -> Result<u64> {
        let i = self.slot(s, a)?;
        let before = self.visits[i];
        self.visits[i] += 1;
        Ok(before)
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action within 1e-9 of the row maximum.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let best = self.max(s);
        row.iter().position(|&v| v >= best - 1e-9).expect("nonempty row")
    }

    /// Mean over states of max_a Q(s, a).
    pub fn average_max(&self) -> f64 {
        let n = self.state_count();
        (0..n).map(|s| self.max(s)).sum::<f64>() / n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dump(&self, model: &TabularModel) -> QTableDump {
        let entries = (0..self.state_count())
            .map(|s| {
                let state = model.space().state(s).as_slice().to_vec();
                let lo = self.offsets[s];
                (0..self.offsets[s + 1] - lo)
                    .map(|a| QEntry { state: state.clone(), action: a, value: self.values[lo + a], visits: self.visits[lo + a] })
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        QTableDump { entries }
    }

    pub fn from_dump(model: &TabularModel, dump: &QTableDump) -> Result<Self> {
        let mut table = Self::zeros(model);
        for e in &dump.entries {
            let s = model.space().index_of(&e.state).ok_or_else(|| Error::UnknownState(e.state.clone()))?;
            let i = table.slot(s, e.action)?;
            table.values[i] = e.value;
            table.visits[i] = e.visits;
        }
        Ok(table)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEntry {
    pub state: Vec<u32>,
    pub action: usize,
    pub value: f64,
    pub visits: u64,
}

/// JSON form of a Q-table keyed by state vector and action index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTableDump {
    pub entries: Vec<QEntry>,
}

/// Q(s,a) ← (1 - α)Q(s,a) + α(r + γ max_a' Q(s', a')).
pub fn q_learning_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    next: usize,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    q.slot(next, 0)?;
    let target = reward + gamma * q.max(next);
    blend(q, s, a, alpha, target)
}

/// Q(s,a) ← (1 - α)Q(s,a) + α(r + γ F*(s')) where F*(s') maximizes the
/// value-penalty function against the prior row μ(·|s').
#[allow(clippy::too_many_arguments)]
pub fn dk_q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    next: usize,
    alpha: f64,
    gamma: f64,
    beta: f64,
    prior_next: &[f64],
    spec: &DivergenceSpec,
) -> Result<f64> {
    check_alpha(alpha)?;
    q.slot(next, 0)?;
    let target = if gamma == 0.0 {
        reward
    } else {
        reward + gamma * max_policy_f(q.row(next), prior_next, beta, spec)?.value
    };
    blend(q, s, a, alpha, target)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("step size must lie in [0, 1], got {alpha}")))
    }
}

fn blend(q: &mut QTable, s: usize, a: usize, alpha: f64, target: f64) -> Result<f64> {
    let i = q.slot(s, a)?;
    let updated = (1.0 - alpha) * q.values[i] + alpha * target;
    q.values[i] = updated;
    Ok(updated)
}
