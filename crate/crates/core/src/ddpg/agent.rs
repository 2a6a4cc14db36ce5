use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::{state_features, transform_action};
use super::replay::Experience;
use crate::env::{MatchingMatrix, ProblemInstance, RewardMatrix, State};
use crate::error::{Error, Result};
use crate::exact::solve_single_period;
use crate::nn::{init_network, mse_loss, Activation, GradRecord, Mlp, OptimizerKind, OptimizerState, FINAL_LAYER_BOUND};
use crate::tabular::DivergenceSpec;

/// Hidden widths of the two networks. The critic ends in an extra width-1
/// linear head so that it outputs a scalar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self { actor_hidden: vec![50, 200, 100], critic_hidden: vec![50, 100, 200] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    pub actor_learning_rate: f64,
    pub critic_learning_rate: f64,
    pub tau: f64,
    pub optimizer: OptimizerKind,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self { actor_learning_rate: 1e-4, critic_learning_rate: 5e-4, tau: 5e-4, optimizer: OptimizerKind::Adam }
    }
}

impl AgentSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if !(self.actor_learning_rate >= 0.0 && self.critic_learning_rate >= 0.0) {
            return Err(Error::Config("learning rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Actor μ(s) ∈ simplex over the m·n cells, critic Q(s, a), and their
/// slowly tracking targets.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPair {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_optimizer: OptimizerState,
    pub critic_optimizer: OptimizerState,
    pub tau: f64,
    m: usize,
    n: usize,
}

fn hidden_activations(hidden: usize, head: Activation) -> Vec<Activation> {
    let mut acts = vec![Activation::Relu; hidden];
    acts.push(head);
    acts
}

impl AgentPair {
    pub fn new<R: Rng + ?Sized>(m: usize, n: usize, shape: &NetworkShape, settings: &AgentSettings, rng: &mut R) -> Result<Self> {
        settings.validate()?;
        let mn = m * n;
        let actor_sizes: Vec<usize> = std::iter::once(m).chain(shape.actor_hidden.iter().copied()).chain([mn]).collect();
        let critic_sizes: Vec<usize> =
            std::iter::once(m + mn).chain(shape.critic_hidden.iter().copied()).chain([1]).collect();
        let actor = init_network(
            &actor_sizes,
            &hidden_activations(shape.actor_hidden.len(), Activation::Softmax),
            FINAL_LAYER_BOUND,
            rng,
        )?;
        let critic = init_network(
            &critic_sizes,
            &hidden_activations(shape.critic_hidden.len(), Activation::Linear),
            FINAL_LAYER_BOUND,
            rng,
        )?;
        Self::from_networks(actor, critic, settings, m, n)
    }

    /// Targets start as copies of the learned networks.
    pub fn from_networks(actor: Mlp, critic: Mlp, settings: &AgentSettings, m: usize, n: usize) -> Result<Self> {
        settings.validate()?;
        if actor.input_size() != m || actor.output_size() != m * n {
            return Err(Error::Shape(format!("actor {:?} does not fit a {m}x{n} instance", actor.sizes())));
        }
        if critic.input_size() != m + m * n || critic.output_size() != 1 {
            return Err(Error::Shape(format!("critic {:?} does not fit a {m}x{n} instance", critic.sizes())));
        }
        let actor_optimizer = OptimizerState::new(settings.optimizer, settings.actor_learning_rate, &actor);
        let critic_optimizer = OptimizerState::new(settings.optimizer, settings.critic_learning_rate, &critic);
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_optimizer,
            critic_optimizer,
            tau: settings.tau,
            m,
            n,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn act(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(features)
    }

    pub fn q_value(&self, features: &[f64], action: &[f64]) -> Result<f64> {
        let input: Vec<f64> = features.iter().chain(action).copied().collect();
        Ok(self.critic.forward(&input)?[0])
    }

    /// Noise-free action at integer state x.
    pub fn greedy_action(&self, x: &State, n_d: u32) -> Result<MatchingMatrix> {
        transform_action(&self.act(&state_features(x, n_d))?, x, self.n)
    }

    /// critic(s, actor(s)) for each state, batched.
    pub fn state_values(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if features.is_empty() {
            return Ok(Vec::new());
        }
        let flat: Vec<f64> = features.iter().flatten().copied().collect();
        let actions = self.actor.forward_batch(&flat, features.len())?;
        let input = concat_rows(&flat, self.m, actions.output(), self.m * self.n);
        Ok(self.critic.forward_batch(&input, features.len())?.output().to_vec())
    }
}

/// Interleaves per-sample state and action rows into critic inputs.
fn concat_rows(states: &[f64], m: usize, actions: &[f64], k: usize) -> Vec<f64> {
    states.chunks_exact(m).zip(actions.chunks_exact(k)).flat_map(|(s, a)| s.iter().chain(a)).copied().collect()
}

/// Single-period optimal matching at x as a per-cell vector, each row
/// divided by x_i; rows with x_i = 0 are zero. Results are cached by state.
#[derive(Clone, Debug)]
pub struct DeepPrior {
    capacities: Vec<u32>,
    reward: RewardMatrix,
    cache: HashMap<State, Vec<f64>>,
}

impl DeepPrior {
    pub fn new(instance: &ProblemInstance) -> Self {
        Self { capacities: instance.capacities().to_vec(), reward: instance.reward().clone(), cache: HashMap::new() }
    }

    pub fn probabilities(&mut self, x: &State) -> Result<&[f64]> {
        if !self.cache.contains_key(x) {
            let q = solve_single_period(x, &self.capacities, &self.reward)?;
            let n = q.cols();
            let probs = q
                .as_slice()
                .chunks_exact(n)
                .zip(x.as_slice())
                .flat_map(|(row, &xi)| {
                    row.iter().map(move |&v| if xi == 0 { 0.0 } else { f64::from(v) / f64::from(xi) })
                })
                .collect();
            self.cache.insert(x.clone(), probs);
        }
        Ok(&self.cache[x])
    }

    pub fn cached_states(&self) -> usize {
        self.cache.len()
    }
}

/// Mean over rows with x_i > 0 of Σ_j π_ij·g_ij, where π_i is the actor's
/// row renormalized to sum 1 and μ_i the prior row. Zero when x = 0.
pub fn deep_penalty(actor: &[f64], prior: &[f64], x: &State, n: usize, spec: &DivergenceSpec) -> Result<f64> {
    if actor.len() != prior.len() || actor.len() != x.len() * n {
        return Err(Error::Shape(format!("actor {} prior {} for {}x{n}", actor.len(), prior.len(), x.len())));
    }
    let mut total = 0.0;
    let mut rows = 0usize;
    for ((a, mu), &xi) in actor.chunks_exact(n).zip(prior.chunks_exact(n)).zip(x.as_slice()) {
        if xi == 0 {
            continue;
        }
        let mass: f64 = a.iter().sum();
        let pi: Vec<f64> = a.iter().map(|v| v / mass).collect();
        total += spec.row_penalty(&pi, mu)?;
        rows += 1;
    }
    Ok(if rows == 0 { 0.0 } else { total / rows as f64 })
}

/// y = r + γ·(g/β + Q').
pub fn dk_target(reward: f64, gamma: f64, g: f64, beta: f64, next_q: f64) -> f64 {
    reward + gamma * (g / beta + next_q)
}

/// Regularized critic targets for a sampled batch, evaluated at the target
/// actor's action a⁺ = μ'(s').
pub fn compute_dk_target(
    batch: &[&Experience],
    agent: &AgentPair,
    gamma: f64,
    beta: f64,
    prior: &mut DeepPrior,
    spec: &DivergenceSpec,
) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::Config(format!("β must be positive, got {beta}")));
    }
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let (m, k) = (agent.m, agent.m * agent.n);
    let next: Vec<f64> = batch.iter().flat_map(|e| e.next_state.iter().copied()).collect();
    let plus = agent.target_actor.forward_batch(&next, batch.len())?;
    let q_next = agent.target_critic.forward_batch(&concat_rows(&next, m, plus.output(), k), batch.len())?;
    batch
        .iter()
        .zip(plus.output().chunks_exact(k))
        .zip(q_next.output())
        .map(|((e, a), &qn)| {
            let mu = prior.probabilities(&e.next_outstanding)?;
            let g = deep_penalty(a, mu, &e.next_outstanding, agent.n, spec)?;
            Ok(dk_target(e.reward, gamma, g, beta, qn))
        })
        .collect()
}

fn stack<'a>(batch: &[&'a Experience], pick: impl Fn(&'a Experience) -> &'a [f64]) -> Vec<f64> {
    batch.iter().flat_map(|e| pick(e).iter().copied()).collect()
}

/// Loss (1/N)Σ(y - Q(s, a))² and its gradient, without stepping.
pub fn critic_gradient(agent: &AgentPair, batch: &[&Experience], targets: &[f64]) -> Result<GradRecord> {
    if batch.is_empty() || targets.len() != batch.len() {
        return Err(Error::Shape(format!("{} targets for a batch of {}", targets.len(), batch.len())));
    }
    let states = stack(batch, |e| &e.state);
    let actions = stack(batch, |e| &e.action);
    let input = concat_rows(&states, agent.m, &actions, agent.m * agent.n);
    let trace = agent.critic.forward_batch(&input, batch.len())?;
    let (loss, upstream) = mse_loss(trace.output(), targets);
    agent.critic.backward(&trace, &upstream, loss)
}

/// One optimizer step on the critic; returns the pre-step loss.
pub fn critic_update(agent: &mut AgentPair, batch: &[&Experience], targets: &[f64]) -> Result<f64> {
    let grads = critic_gradient(agent, batch, targets)?;
    agent.critic_optimizer.apply(&mut agent.critic, &grads);
    Ok(grads.loss)
}

/// J = (1/N)Σ Q(s_i, μ(s_i)) and ∂J/∂θ_μ via the critic's action gradient.
/// The critic is left untouched.
pub fn actor_gradient(agent: &AgentPair, batch: &[&Experience]) -> Result<(f64, GradRecord)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let (m, k, size) = (agent.m, agent.m * agent.n, batch.len());
    let states = stack(batch, |e| &e.state);
    let actor_trace = agent.actor.forward_batch(&states, size)?;
    let critic_trace = agent.critic.forward_batch(&concat_rows(&states, m, actor_trace.output(), k), size)?;
    let objective = critic_trace.output().iter().sum::<f64>() / size as f64;
    let per_sample = vec![1.0 / size as f64; size];
    let critic_grads = agent.critic.backward(&critic_trace, &per_sample, objective)?;
    let upstream: Vec<f64> = critic_grads.inputs.chunks_exact(m + k).flat_map(|row| row[m..].iter().copied()).collect();
    let grads = agent.actor.backward(&actor_trace, &upstream, objective)?;
    Ok((objective, grads))
}

/// One ascent step on the actor; returns the pre-step objective.
pub fn actor_update(agent: &mut AgentPair, batch: &[&Experience]) -> Result<f64> {
    let (objective, mut grads) = actor_gradient(agent, batch)?;
    grads.scale(-1.0);
    agent.actor_optimizer.apply(&mut agent.actor, &grads);
    Ok(objective)
}

/// θ' ← τθ + (1 - τ)θ' for both targets.
pub fn soft_update(agent: &mut AgentPair, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("tau must lie in [0, 1], got {tau}")));
    }
    let blend = |target: &mut Mlp, learned: &Mlp| {
        for (t, p) in target.parameters_mut().zip(learned.parameters()) {
            *t = tau * p + (1.0 - tau) * *t;
        }
    };
    blend(&mut agent.target_actor, &agent.actor);
    blend(&mut agent.target_critic, &agent.critic);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::worked_example;
    use crate::nn::Layer;
    use crate::rng;

    fn small_agent(m: usize, n: usize, seed: u64) -> AgentPair {
        let shape = NetworkShape { actor_hidden: vec![5, 4], critic_hidden: vec![6, 3] };
        AgentPair::new(m, n, &shape, &AgentSettings::default(), &mut rng::stream(seed)).unwrap()
    }

    fn random_batch(m: usize, n: usize, size: usize, seed: u64) -> Vec<Experience> {
        let mut r = rng::stream(seed);
        (0..size)
            .map(|_| {
                let mut a: Vec<f64> = (0..m * n).map(|_| r.gen_range(0.01..1.0)).collect();
                let t: f64 = a.iter().sum();
                a.iter_mut().for_each(|v| *v /= t);
                let next: Vec<u32> = (0..m).map(|_| r.gen_range(0..5)).collect();
                Experience {
                    state: (0..m).map(|_| r.gen_range(0.0..1.0)).collect(),
                    action: a,
                    reward: r.gen_range(-5.0..5.0),
                    next_state: next.iter().map(|&v| f64::from(v) / 4.0).collect(),
                    next_outstanding: State::new(next),
                }
            })
            .collect()
    }

    fn linear_critic(m: usize, w: &[f64], bias: f64) -> Mlp {
        let weights = std::iter::repeat_n(0.0, m).chain(w.iter().copied()).collect();
        Mlp::from_layers(vec![Layer { inputs: m + w.len(), outputs: 1, activation: Activation::Linear, weights, biases: vec![bias] }])
            .unwrap()
    }

    #[test]
    fn construction_matches_layout() {
        let shape = NetworkShape::default();
        let agent = AgentPair::new(2, 2, &shape, &AgentSettings::default(), &mut rng::stream(0)).unwrap();
        assert_eq!(agent.actor.sizes(), vec![2, 50, 200, 100, 4]);
        assert_eq!(agent.critic.sizes(), vec![6, 50, 100, 200, 1]);
        assert_eq!(agent.actor, agent.target_actor);
        assert_eq!(agent.critic, agent.target_critic);
        let p = agent.act(&[0.3, 0.9]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn target_formula() {
        assert!((dk_target(2.0, 0.9, -0.25, 1.0, 10.0) - 10.775).abs() < 1e-12);
        assert_eq!(dk_target(2.0, 0.0, -0.25, 1.0, 10.0), 2.0);
        assert!((dk_target(2.0, 0.9, -0.25, 1e12, 10.0) - 11.0).abs() < 1e-6);
    }

    #[test]
    fn batch_targets_degenerate_cases() {
        let inst = worked_example();
        let agent = small_agent(2, 2, 3);
        let data = random_batch(2, 2, 8, 4);
        let batch: Vec<&Experience> = data.iter().collect();
        let mut prior = DeepPrior::new(&inst);
        let spec = DivergenceSpec::squared_l2();
        let y0 = compute_dk_target(&batch, &agent, 0.0, 1.0, &mut prior, &spec).unwrap();
        assert!(y0.iter().zip(&data).all(|(y, e)| *y == e.reward));
        let huge = compute_dk_target(&batch, &agent, 0.9, 1e12, &mut prior, &spec).unwrap();
        for (y, e) in huge.iter().zip(&data) {
            let a = agent.target_actor.forward(&e.next_state).unwrap();
            let q: Vec<f64> = e.next_state.iter().chain(&a).copied().collect();
            let plain = e.reward + 0.9 * agent.target_critic.forward(&q).unwrap()[0];
            assert!((y - plain).abs() < 1e-6);
        }
        assert!(compute_dk_target(&batch, &agent, 0.9, 0.0, &mut prior, &spec).is_err());
    }

    #[test]
    fn prior_rows_follow_single_period_solution() {
        let mut prior = DeepPrior::new(&worked_example());
        let p = prior.probabilities(&State::new(vec![8, 7])).unwrap().to_vec();
        assert_eq!(p, vec![0.75, 0.0, 0.0, 5.0 / 7.0]);
        assert_eq!(prior.probabilities(&State::new(vec![0, 2])).unwrap()[..2], [0.0, 0.0]);
        assert_eq!(prior.cached_states(), 2);
    }

    #[test]
    fn deep_penalty_cases() {
        let spec = DivergenceSpec::squared_l2();
        let x = State::new(vec![4, 0]);
        // row 0 renormalizes to the prior; row 1 is inactive
        assert_eq!(deep_penalty(&[0.25, 0.25, 0.4, 0.1], &[0.5, 0.5, 0.0, 0.0], &x, 2, &spec).unwrap(), 0.0);
        let g = deep_penalty(&[0.5, 0.0, 0.3, 0.2], &[0.0, 1.0, 0.0, 0.0], &x, 2, &spec).unwrap();
        assert!((g + 1.0).abs() < 1e-12);
        assert_eq!(deep_penalty(&[0.5; 4], &[0.0; 4], &State::new(vec![0, 0]), 2, &spec).unwrap(), 0.0);
        assert!(deep_penalty(&[0.5; 3], &[0.0; 4], &x, 2, &spec).is_err());
    }

    #[test]
    fn critic_loss_examples() {
        let mut agent =
            AgentPair::from_networks(small_agent(1, 1, 0).actor, linear_critic(1, &[0.0], 1.0), &AgentSettings::default(), 1, 1)
                .unwrap();
        let e = Experience {
            state: vec![0.5],
            action: vec![1.0],
            reward: 0.0,
            next_state: vec![0.5],
            next_outstanding: State::new(vec![1]),
        };
        assert_eq!(critic_update(&mut agent, &[&e], &[3.0]).unwrap(), 4.0);

        let agent = small_agent(2, 2, 5);
        let data = random_batch(2, 2, 6, 6);
        let batch: Vec<&Experience> = data.iter().collect();
        let exact: Vec<f64> = data.iter().map(|e| agent.q_value(&e.state, &e.action).unwrap()).collect();
        let g = critic_gradient(&agent, &batch, &exact).unwrap();
        assert_eq!(g.loss, 0.0);
        assert_eq!(g.max_abs(), 0.0);
        assert!(critic_gradient(&agent, &[], &[]).is_err());
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let agent = small_agent(2, 2, 7);
        let data = random_batch(2, 2, 5, 8);
        let batch: Vec<&Experience> = data.iter().collect();
        let targets: Vec<f64> = (0..5).map(|k| k as f64 * 0.3 - 0.5).collect();
        let g = critic_gradient(&agent, &batch, &targets).unwrap();
        let analytic: Vec<f64> = g.weights.iter().zip(&g.biases).flat_map(|(w, b)| w.iter().chain(b)).copied().collect();
        let loss = |critic: &Mlp| {
            let probe = AgentPair { critic: critic.clone(), ..agent.clone() };
            critic_gradient(&probe, &batch, &targets).unwrap().loss
        };
        let h = 1e-5;
        for (k, &a) in analytic.iter().enumerate() {
            let mut plus = agent.critic.clone();
            let mut minus = agent.critic.clone();
            *plus.parameters_mut().nth(k).unwrap() += h;
            *minus.parameters_mut().nth(k).unwrap() -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6) < 1e-4, "param {k}: {a} vs {numeric}");
        }
    }

    #[test]
    fn actor_gradient_through_linear_critic() {
        let w = [0.7, -1.3, 0.4, 2.0];
        let base = small_agent(2, 2, 9);
        let agent = AgentPair::from_networks(base.actor, linear_critic(2, &w, 0.5), &AgentSettings::default(), 2, 2).unwrap();
        let data = random_batch(2, 2, 1, 10);
        let (objective, g) = actor_gradient(&agent, &[&data[0]]).unwrap();
        let j = |actor: &Mlp| -> f64 {
            actor.forward(&data[0].state).unwrap().iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() + 0.5
        };
        assert!((objective - j(&agent.actor)).abs() < 1e-12);
        let analytic: Vec<f64> = g.weights.iter().zip(&g.biases).flat_map(|(w, b)| w.iter().chain(b)).copied().collect();
        let h = 1e-5;
        for (k, &a) in analytic.iter().enumerate() {
            let mut plus = agent.actor.clone();
            let mut minus = agent.actor.clone();
            *plus.parameters_mut().nth(k).unwrap() += h;
            *minus.parameters_mut().nth(k).unwrap() -= h;
            let numeric = (j(&plus) - j(&minus)) / (2.0 * h);
            assert!((a - numeric).abs() < 1e-6, "param {k}: {a} vs {numeric}");
        }

        // critic blind to the action: nothing to follow
        let flat = AgentPair::from_networks(agent.actor.clone(), linear_critic(2, &[0.0; 4], 3.0), &AgentSettings::default(), 2, 2)
            .unwrap();
        assert_eq!(actor_gradient(&flat, &[&data[0]]).unwrap().1.max_abs(), 0.0);
    }

    #[test]
    fn actor_step_ascends_frozen_critic() {
        let settings = AgentSettings { actor_learning_rate: 1e-3, optimizer: OptimizerKind::Sgd, ..AgentSettings::default() };
        let mut improved = 0;
        for trial in 0..10 {
            let shape = NetworkShape { actor_hidden: vec![6], critic_hidden: vec![8] };
            let mut r = rng::stream(100 + trial);
            let base = AgentPair::new(2, 2, &shape, &settings, &mut r).unwrap();
            // a critic with sizable action weights so the gradient is not negligible
            let critic = init_network(&[6, 8, 1], &[Activation::Relu, Activation::Linear], 1.0, &mut r).unwrap();
            let mut agent = AgentPair::from_networks(base.actor, critic, &settings, 2, 2).unwrap();
            let data = random_batch(2, 2, 8, 200 + trial);
            let batch: Vec<&Experience> = data.iter().collect();
            let before = actor_update(&mut agent, &batch).unwrap();
            let after = actor_gradient(&agent, &batch).unwrap().0;
            improved += usize::from(after >= before);
        }
        assert!(improved >= 9, "{improved}/10");
    }

    #[test]
    fn soft_update_examples() {
        let mut agent = small_agent(1, 2, 11);
        agent.actor.parameters_mut().for_each(|p| *p = 2.0);
        agent.target_actor.parameters_mut().for_each(|p| *p = 0.0);
        let frozen = agent.clone();
        soft_update(&mut agent, 0.0).unwrap();
        assert_eq!(agent, frozen);
        soft_update(&mut agent, 0.5).unwrap();
        assert!(agent.target_actor.parameters().all(|p| p == 1.0));
        soft_update(&mut agent, 1.0).unwrap();
        assert_eq!(agent.target_actor, agent.actor);
        assert_eq!(agent.target_critic, agent.critic);
        assert!(soft_update(&mut agent, 1.5).is_err());
    }

    #[test]
    fn targets_stay_within_learned_envelope() {
        let mut agent = small_agent(2, 2, 12);
        let settings = AgentSettings { actor_learning_rate: 0.01, critic_learning_rate: 0.01, ..AgentSettings::default() };
        agent.actor_optimizer = OptimizerState::new(settings.optimizer, 0.01, &agent.actor);
        agent.critic_optimizer = OptimizerState::new(settings.optimizer, 0.01, &agent.critic);
        let mut lo: Vec<f64> = agent.actor.parameters().chain(agent.critic.parameters()).collect();
        let mut hi = lo.clone();
        let data = random_batch(2, 2, 16, 13);
        let batch: Vec<&Experience> = data.iter().collect();
        let mut prior = DeepPrior::new(&worked_example());
        for _ in 0..30 {
            let y = compute_dk_target(&batch, &agent, 0.9, 1.0, &mut prior, &DivergenceSpec::squared_l2()).unwrap();
            critic_update(&mut agent, &batch, &y).unwrap();
            actor_update(&mut agent, &batch).unwrap();
            soft_update(&mut agent, 0.1).unwrap();
            for ((l, h), p) in lo.iter_mut().zip(hi.iter_mut()).zip(agent.actor.parameters().chain(agent.critic.parameters())) {
                *l = l.min(p);
                *h = h.max(p);
            }
            let targets = agent.target_actor.parameters().chain(agent.target_critic.parameters());
            for ((l, h), t) in lo.iter().zip(&hi).zip(targets) {
                assert!(t >= l - 1e-12 && t <= h + 1e-12);
            }
        }
    }
}
