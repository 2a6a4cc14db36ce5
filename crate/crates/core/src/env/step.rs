use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::instance::ProblemInstance;
use super::matrix::{MatchingMatrix, State};
use super::reward::{capacity_penalty, demand_penalty, matching_reward};
use crate::error::Result;

/// Result of one environment transition.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: State,
    /// raw_reward - demand_penalty - capacity_penalty
    pub net_reward: f64,
    pub raw_reward: f64,
    pub demand_drawn: Vec<u32>,
    pub demand_penalty: f64,
    pub capacity_penalty: f64,
}

impl StepOutcome {
    /// Reward identity, checked bit-for-bit, plus zero penalties whenever the
    /// action was feasible.
    pub fn audit(&self, feasible: bool) -> bool {
        let identity = self.net_reward.to_bits()
            == (self.raw_reward - self.demand_penalty - self.capacity_penalty).to_bits();
        let penalties_clear = !feasible || (self.demand_penalty == 0.0 && self.capacity_penalty == 0.0);
        identity && penalties_clear
    }
}

/// Per-type demand samplers, built once per instance.
#[derive(Clone, Debug)]
pub struct DemandModel {
    samplers: Vec<WeightedIndex<f64>>,
}

impl DemandModel {
    pub fn new(instance: &ProblemInstance) -> Self {
        let samplers = instance
            .demand_pmfs()
            .iter()
            .map(|pmf| WeightedIndex::new(pmf).expect("validated pmf"))
            .collect();
        Self { samplers }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        self.samplers.iter().map(|s| s.sample(rng) as u32).collect()
    }
}

/// Draws d_i independently from each type's pmf.
pub fn sample_demand<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Vec<u32> {
    DemandModel::new(instance).sample(rng)
}

/// Next outstanding demand: x'_i = min(x_i + d_i - min(q̄_i, x_i), N_d).
/// Matched quantities beyond x_i are penalized but never executed.
pub fn next_state(instance: &ProblemInstance, x: &State, q: &MatchingMatrix, demand: &[u32]) -> State {
    let limit = instance.n_d();
    let next = x
        .as_slice()
        .iter()
        .zip(q.row_totals())
        .zip(demand)
        .map(|((&xi, qi), &di)| (xi - qi.min(xi) + di).min(limit))
        .collect();
    State::new(next)
}

/// Transition with a known demand draw.
pub fn step_with_demand(
    instance: &ProblemInstance,
    x: &State,
    q: &MatchingMatrix,
    demand: Vec<u32>,
) -> Result<StepOutcome> {
    let raw_reward = matching_reward(instance.reward(), q)?;
    let u = demand_penalty(x, q, instance.k1());
    let v = capacity_penalty(q, instance.capacities(), instance.k2());
    Ok(StepOutcome {
        next_state: next_state(instance, x, q, &demand),
        net_reward: raw_reward - u - v,
        raw_reward,
        demand_drawn: demand,
        demand_penalty: u,
        capacity_penalty: v,
    })
}

pub fn step<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    x: &State,
    q: &MatchingMatrix,
    rng: &mut R,
) -> Result<StepOutcome> {
    let demand = sample_demand(instance, rng);
    step_with_demand(instance, x, q, demand)
}

/// Same as [`step`] with a prebuilt demand model.
pub fn step_with_model<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    demand_model: &DemandModel,
    x: &State,
    q: &MatchingMatrix,
    rng: &mut R,
) -> Result<StepOutcome> {
    let demand = demand_model.sample(rng);
    step_with_demand(instance, x, q, demand)
}
