use serde::{Deserialize, Serialize};

use crate::env::{enumerate_feasible_actions, MatchingMatrix, ProblemInstance, State, StateSpace};
use crate::error::{Error, Result};
use crate::exact::solve_single_period;

/// The truncated state grid together with each state's feasible actions in
/// ascending row-major order. Action indices refer to that order.
#[derive(Clone, Debug)]
pub struct TabularModel {
    instance: ProblemInstance,
    space: StateSpace,
    actions: Vec<Vec<MatchingMatrix>>,
    offsets: Vec<usize>,
}

impl TabularModel {
    /// `action_cap` bounds the total number of (state, action) pairs.
    pub fn new(instance: &ProblemInstance, state_cap: usize, action_cap: usize) -> Result<Self> {
        let space = StateSpace::for_instance(instance, state_cap)?;
        let mut actions = Vec::with_capacity(space.len());
        let mut offsets = Vec::with_capacity(space.len() + 1);
        let mut total = 0usize;
        for x in space.states() {
            let acts = enumerate_feasible_actions(&x, instance.capacities(), action_cap - total)
                .map_err(|_| Error::ActionLimit { cap: action_cap })?;
            offsets.push(total);
            total += acts.len();
            actions.push(acts);
        }
        offsets.push(total);
        Ok(Self { instance: instance.clone(), space, actions, offsets })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn state_count(&self) -> usize {
        self.space.len()
    }

    pub fn pair_count(&self) -> usize {
        self.offsets[self.space.len()]
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s < self.space.len() {
            Ok(())
        } else {
            Err(Error::StateIndex { index: s, count: self.space.len() })
        }
    }

    pub fn actions(&self, s: usize) -> &[MatchingMatrix] {
        &self.actions[s]
    }

    pub fn action(&self, s: usize, a: usize) -> Result<&MatchingMatrix> {
        self.check_state(s)?;
        self.actions[s].get(a).ok_or(Error::UnknownAction { index: a, count: self.actions[s].len() })
    }

    pub fn action_index(&self, s: usize, q: &MatchingMatrix) -> Option<usize> {
        self.actions.get(s)?.binary_search(q).ok()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn state_index(&self, x: &State) -> Result<usize> {
        self.space.index(x)
    }
}

/// μ(a|s) over each state's feasible enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorPolicy {
    rows: Vec<Vec<f64>>,
    modes: Vec<usize>,
}

impl PriorPolicy {
    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }

    /// Index of the single-period optimum at state s.
    pub fn mode(&self, s: usize) -> usize {
        self.modes[s]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One-hot prior at the single-period optimum, mixed with uniform by
/// `smoothing`.
pub fn make_prior_policy(model: &TabularModel, smoothing: f64) -> Result<PriorPolicy> {
    if !(0.0..=1.0).contains(&smoothing) {
        return Err(Error::Config(format!("prior smoothing must lie in [0, 1], got {smoothing}")));
    }
    let inst = model.instance();
    let mut rows = Vec::with_capacity(model.state_count());
    let mut modes = Vec::with_capacity(model.state_count());
    for (s, x) in model.space().states().enumerate() {
        let best = solve_single_period(&x, inst.capacities(), inst.reward())?;
        let mode = model.action_index(s, &best).expect("the single-period optimum is feasible");
        let n = model.actions(s).len();
        let mut row = vec![smoothing / n as f64; n];
        row[mode] += 1.0 - smoothing;
        rows.push(row);
        modes.push(mode);
    }
    Ok(PriorPolicy { rows, modes })
}
