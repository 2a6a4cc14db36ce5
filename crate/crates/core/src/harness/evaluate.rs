use crate::ddpg::{deep_average_q, metric_states, random_state, AgentPair};
use crate::env::{step_with_demand, DemandModel, MatchingMatrix, ProblemInstance, State};
use crate::error::{Error, Result};
use crate::exact::{stationary_values_with_cap, StationarySolution};
use crate::rng;
use crate::tabular::{QTable, TabularModel};

/// A noise-free decision rule over integer states.
pub trait GreedyPolicy {
    /// (m, n) the policy was built for.
    fn shape(&self) -> (usize, usize);
    fn decide(&self, x: &State) -> Result<MatchingMatrix>;
}

pub struct TabularGreedy<'a> {
    pub model: &'a TabularModel,
    pub table: &'a QTable,
}

impl GreedyPolicy for TabularGreedy<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.model.instance().m(), self.model.instance().n())
    }

    fn decide(&self, x: &State) -> Result<MatchingMatrix> {
        let s = self.model.state_index(x)?;
        self.model.action(s, self.table.greedy(s)).cloned()
    }
}

pub struct DeepGreedy<'a> {
    pub agent: &'a AgentPair,
    pub n_d: u32,
}

impl GreedyPolicy for DeepGreedy<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.agent.m(), self.agent.n())
    }

    fn decide(&self, x: &State) -> Result<MatchingMatrix> {
        self.agent.greedy_action(x, self.n_d)
    }
}

impl GreedyPolicy for StationarySolution {
    fn shape(&self) -> (usize, usize) {
        let q = &self.policy[0];
        (q.rows(), q.cols())
    }

    fn decide(&self, x: &State) -> Result<MatchingMatrix> {
        self.action(x).cloned()
    }
}

/// Undiscounted net reward of a `horizon`-step greedy rollout from a
/// seeded uniform truncated start state.
pub fn evaluate_trained<P: GreedyPolicy + ?Sized>(
    policy: &P,
    instance: &ProblemInstance,
    horizon: usize,
    seed: u64,
) -> Result<f64> {
    if policy.shape() != (instance.m(), instance.n()) {
        return Err(Error::Shape(format!(
            "policy is {:?} but the instance is {}x{}",
            policy.shape(),
            instance.m(),
            instance.n()
        )));
    }
    let demand = DemandModel::new(instance);
    let mut r = rng::stream(seed);
    let mut x = random_state(instance, &mut r);
    let mut total = 0.0;
    for _ in 0..horizon {
        let q = policy.decide(&x)?;
        let outcome = step_with_demand(instance, &x, &q, demand.sample(&mut r))?;
        total += outcome.net_reward;
        x = outcome.next_state;
    }
    Ok(total)
}

/// Trained artifacts whose average learned value can be reported.
pub enum Artifact<'a> {
    Tabular(&'a QTable),
    Deep { agent: &'a AgentPair, sample_cap: usize, seed: u64 },
}

/// Mean over truncated states of max_a Q(s, a) for tables, or of
/// critic(s, actor(s)) for agents (over a seeded sample when the space
/// exceeds `sample_cap`).
pub fn average_q_metric(artifact: &Artifact<'_>, instance: &ProblemInstance) -> Result<f64> {
    match artifact {
        Artifact::Tabular(table) => Ok(table.average_max()),
        Artifact::Deep { agent, sample_cap, seed } => {
            deep_average_q(agent, instance, &metric_states(instance, *sample_cap, *seed))
        }
    }
}

/// Mean of V* over every truncated state.
pub fn oracle_average_value(instance: &ProblemInstance, tol: f64, state_cap: usize) -> Result<f64> {
    let sol = stationary_values_with_cap(instance, tol, state_cap)?;
    Ok(sol.values.iter().sum::<f64>() / sol.values.len() as f64)
}
