use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::{perturb_action, state_features, transform_action};
use super::agent::{actor_update, compute_dk_target, critic_update, soft_update, AgentPair, AgentSettings, DeepPrior, NetworkShape};
use super::replay::{Experience, ReplayBuffer, DEFAULT_REPLAY_CAPACITY};
use crate::env::{is_feasible, step_with_demand, DemandModel, ProblemInstance, State};
use crate::error::{Error, Result};
use crate::harness::{ConvergenceDetector, EpisodeRecord, RunRecord};
use crate::rng;
use crate::schedule::{BetaSchedule, ExplorationSchedule};
use crate::tabular::{Clock, DivergenceSpec};

pub const DEFAULT_METRIC_SAMPLE_CAP: usize = 1000;

/// Stream label for the metric's state sample, kept apart from training.
const METRIC_STREAM: u64 = 0x6d65_7472_6963;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DeepMethod {
    Ddpg,
    DomainKnowledge { beta: BetaSchedule },
}

impl DeepMethod {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ddpg => "ddpg",
            Self::DomainKnowledge { .. } => "dkddpg",
        }
    }

    /// Plain DDPG is the regularized learner with β pinned at 10^12.
    pub fn beta_schedule(&self) -> BetaSchedule {
        match *self {
            Self::Ddpg => BetaSchedule::unregularized(),
            Self::DomainKnowledge { beta } => beta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub agent: AgentSettings,
    pub network: NetworkShape,
    pub exploration: ExplorationSchedule,
    pub divergence: DivergenceSpec,
    pub convergence_threshold: Option<f64>,
    /// states used by the average-Q metric when the space is larger
    pub metric_sample_cap: usize,
    pub wall_clock_cap_secs: Option<f64>,
    pub record_wall_clock: bool,
}

impl Default for DeepConfig {
    fn default() -> Self {
        Self {
            episodes: 3000,
            steps_per_episode: 500,
            batch_size: 64,
            replay_capacity: DEFAULT_REPLAY_CAPACITY,
            agent: AgentSettings::default(),
            network: NetworkShape::default(),
            exploration: ExplorationSchedule::default(),
            divergence: DivergenceSpec::squared_l2(),
            convergence_threshold: Some(crate::harness::SMALL_THRESHOLD),
            metric_sample_cap: DEFAULT_METRIC_SAMPLE_CAP,
            wall_clock_cap_secs: None,
            record_wall_clock: true,
        }
    }
}

impl DeepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 || self.batch_size == 0 || self.metric_sample_cap == 0 {
            return Err(Error::Config("episode, step, batch and metric caps must be at least 1".into()));
        }
        if let Some(t) = self.convergence_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("convergence threshold must lie in (0, 1), got {t}")));
            }
        }
        self.agent.validate()?;
        self.exploration.validate()
    }
}

/// Every truncated state when there are at most `cap`, otherwise `cap`
/// uniform draws from a stream fixed by `seed`.
pub fn metric_states(instance: &ProblemInstance, cap: usize, seed: u64) -> Vec<State> {
    let side = u128::from(instance.n_d()) + 1;
    let total = (0..instance.m()).try_fold(1u128, |acc, _| acc.checked_mul(side));
    match total {
        Some(t) if t <= cap as u128 => {
            let space = crate::env::StateSpace::new(instance.m(), instance.n_d(), cap).expect("size checked above");
            space.states().collect()
        }
        _ => {
            let mut r = rng::substream(seed, METRIC_STREAM);
            (0..cap).map(|_| random_state(instance, &mut r)).collect()
        }
    }
}

pub fn random_state<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> State {
    State::new((0..instance.m()).map(|_| rng.gen_range(0..=instance.n_d())).collect())
}

/// Mean of critic(s, actor(s)) over the given states.
pub fn deep_average_q(agent: &AgentPair, instance: &ProblemInstance, states: &[State]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Config("average-Q metric needs at least one state".into()));
    }
    let feats: Vec<Vec<f64>> = states.iter().map(|x| state_features(x, instance.n_d())).collect();
    Ok(agent.state_values(&feats)?.iter().sum::<f64>() / states.len() as f64)
}

/// Actor-critic training with the regularized critic target. Each episode
/// starts from a uniform random truncated state; updates begin once the
/// buffer holds one batch and then run every step in the order critic,
/// actor, targets.
pub fn train_agent(
    instance: &ProblemInstance,
    config: &DeepConfig,
    method: &DeepMethod,
    seed: u64,
) -> Result<(AgentPair, RunRecord)> {
    config.validate()?;
    let beta = method.beta_schedule();
    beta.validate()?;
    let (m, n, n_d) = (instance.m(), instance.n(), instance.n_d());
    let gamma = instance.gamma();
    let demand = DemandModel::new(instance);
    let mut rng = rng::stream(seed);
    let mut agent = AgentPair::new(m, n, &config.network, &config.agent, &mut rng)?;
    let mut prior = DeepPrior::new(instance);
    let mut buffer = ReplayBuffer::new(config.replay_capacity)?;
    let eval_states = metric_states(instance, config.metric_sample_cap, seed);
    let mut record = RunRecord::new(method.label(), seed);
    let mut detector = config.convergence_threshold.map(ConvergenceDetector::new);
    let clock = Clock::new(config.wall_clock_cap_secs, config.record_wall_clock);
    let mut global_step = 0u64;

    for episode in 0..config.episodes {
        let epsilon = config.exploration.epsilon(episode);
        let mut x = random_state(instance, &mut rng);
        let mut features = state_features(&x, n_d);
        let mut episode_reward = 0.0;
        let mut infeasible = 0u64;
        let mut beta_now = beta.beta_at(global_step + 1);
        for _ in 0..config.steps_per_episode {
            global_step += 1;
            beta_now = beta.beta_at(global_step);
            let raw = agent.act(&features)?;
            let probs = perturb_action(&raw, epsilon, config.exploration.sigma, &mut rng);
            let action = transform_action(&probs, &x, n)?;
            let outcome = step_with_demand(instance, &x, &action, demand.sample(&mut rng))?;
            let feasible = is_feasible(&x, &action, instance.capacities());
            record.audit.record(&outcome, feasible);
            infeasible += u64::from(!feasible);
            episode_reward += outcome.net_reward;
            let next_features = state_features(&outcome.next_state, n_d);
            buffer.push(Experience {
                state: features,
                action: probs,
                reward: outcome.net_reward,
                next_state: next_features.clone(),
                next_outstanding: outcome.next_state.clone(),
            });
            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng);
                let targets = compute_dk_target(&batch, &agent, gamma, beta_now, &mut prior, &config.divergence)?;
                critic_update(&mut agent, &batch, &targets)?;
                actor_update(&mut agent, &batch)?;
                soft_update(&mut agent, config.agent.tau)?;
            }
            x = outcome.next_state;
            features = next_features;
        }
        let avg_q = deep_average_q(&agent, instance, &eval_states)?;
        record.push(EpisodeRecord {
            episode,
            steps: config.steps_per_episode,
            avg_q,
            episode_reward,
            infeasible_action_count: infeasible,
            beta: beta_now,
            epsilon,
            wall_ms: clock.wall_ms(),
        });
        if let Some(det) = detector.as_mut() {
            if let Some(at) = det.observe(episode, avg_q) {
                record.mark_converged(at);
                break;
            }
        }
        if clock.expired() {
            record.summary.timed_out = true;
            break;
        }
    }
    Ok((agent, record))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaChoice {
    pub index: usize,
    pub kappa: f64,
    /// total episodic reward over the probe window, per candidate
    pub totals: Vec<f64>,
}

/// Runs `probe_episodes` of the regularized learner for each κ and keeps
/// the one with the largest total episodic reward; the first wins ties. A
/// single candidate is returned without probing.
pub fn kappa_search(
    instance: &ProblemInstance,
    config: &DeepConfig,
    candidates: &[f64],
    probe_episodes: usize,
    seed: u64,
) -> Result<KappaChoice> {
    match candidates {
        [] => return Err(Error::Config("no κ candidates".into())),
        [only] => return Ok(KappaChoice { index: 0, kappa: *only, totals: Vec::new() }),
        _ => {}
    }
    let probe = DeepConfig { episodes: probe_episodes, convergence_threshold: None, ..config.clone() };
    let totals = candidates
        .iter()
        .map(|&kappa| {
            let method = DeepMethod::DomainKnowledge { beta: BetaSchedule::Linear { kappa } };
            let (_, rec) = train_agent(instance, &probe, &method, seed)?;
            Ok(rec.rows.iter().map(|r| r.episode_reward).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    let index = totals.iter().enumerate().fold(0, |best, (k, &t)| if t > totals[best] { k } else { best });
    Ok(KappaChoice { index, kappa: candidates[index], totals })
}

/// Ten κ values log-uniform in [10^lo, 10^hi], fixed by `seed`.
pub fn kappa_candidates(seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut r = rng::stream(seed);
    (0..10).map(|_| 10f64.powf(r.gen_range(lo..=hi))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RewardMatrix;

    fn tiny() -> ProblemInstance {
        let r = RewardMatrix::from_rows(&[vec![10.0, 7.0], vec![5.0, 8.0]]).unwrap();
        ProblemInstance::builder(vec![1, 2], vec![vec![0.5, 0.3, 0.2], vec![0.6, 0.4]], r, 0.8).truncation(2).build().unwrap()
    }

    fn quick() -> DeepConfig {
        DeepConfig {
            episodes: 6,
            steps_per_episode: 12,
            batch_size: 8,
            network: NetworkShape { actor_hidden: vec![6], critic_hidden: vec![6] },
            agent: AgentSettings { tau: 0.05, actor_learning_rate: 1e-3, critic_learning_rate: 1e-3, ..AgentSettings::default() },
            convergence_threshold: None,
            record_wall_clock: false,
            ..DeepConfig::default()
        }
    }

    #[test]
    fn frozen_learning_keeps_initial_parameters() {
        let cfg = DeepConfig {
            agent: AgentSettings { actor_learning_rate: 0.0, critic_learning_rate: 0.0, ..quick().agent },
            ..quick()
        };
        let (agent, rec) = train_agent(&tiny(), &cfg, &DeepMethod::Ddpg, 4).unwrap();
        let init = AgentPair::new(2, 2, &cfg.network, &cfg.agent, &mut rng::stream(4)).unwrap();
        assert!(agent.actor.parameters().zip(init.actor.parameters()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(agent.critic.parameters().zip(init.critic.parameters()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(rec.rows.len(), 6);
    }

    #[test]
    fn unregularized_target_reproduces_plain_run() {
        let dk = DeepMethod::DomainKnowledge { beta: BetaSchedule::unregularized() };
        let (a, ra) = train_agent(&tiny(), &quick(), &DeepMethod::Ddpg, 5).unwrap();
        let (b, rb) = train_agent(&tiny(), &quick(), &dk, 5).unwrap();
        assert_eq!(ra.rows, rb.rows);
        assert_eq!(a, b);
        assert_eq!((ra.method.as_str(), rb.method.as_str()), ("ddpg", "dkddpg"));
    }

    #[test]
    fn runs_are_seeded_and_audited() {
        let method = DeepMethod::DomainKnowledge { beta: BetaSchedule::Linear { kappa: 0.01 } };
        let (_, a) = train_agent(&tiny(), &quick(), &method, 6).unwrap();
        let (_, b) = train_agent(&tiny(), &quick(), &method, 6).unwrap();
        let (_, c) = train_agent(&tiny(), &quick(), &method, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rows, c.rows);
        assert!(a.is_consistent());
        assert!(a.audit.is_clean());
        assert_eq!(a.audit.steps, 72);
        assert!(a.rows.iter().all(|r| r.beta > 0.0 && r.steps == 12));
    }

    #[test]
    fn metric_states_enumerate_or_sample() {
        let inst = tiny();
        assert_eq!(metric_states(&inst, 100, 0).len(), 9);
        let sampled = metric_states(&inst, 4, 1);
        assert_eq!(sampled.len(), 4);
        assert_eq!(sampled, metric_states(&inst, 4, 1));
        assert!(sampled.iter().all(|x| x.as_slice().iter().all(|&v| v <= 2)));
    }

    #[test]
    fn average_q_is_deterministic() {
        let (agent, _) = train_agent(&tiny(), &quick(), &DeepMethod::Ddpg, 8).unwrap();
        let states = metric_states(&tiny(), 100, 0);
        let a = deep_average_q(&agent, &tiny(), &states).unwrap();
        assert_eq!(a.to_bits(), deep_average_q(&agent, &tiny(), &states).unwrap().to_bits());
        assert!(deep_average_q(&agent, &tiny(), &[]).is_err());
    }

    #[test]
    fn kappa_search_rules() {
        let cfg = quick();
        let one = kappa_search(&tiny(), &cfg, &[0.3], 2, 0).unwrap();
        assert_eq!((one.index, one.kappa), (0, 0.3));
        let dup = kappa_search(&tiny(), &cfg, &[0.5, 0.5], 2, 0).unwrap();
        assert_eq!(dup.index, 0);
        assert_eq!(dup.totals[0], dup.totals[1]);
        let a = kappa_search(&tiny(), &cfg, &[1e-3, 1e3], 2, 9).unwrap();
        let b = kappa_search(&tiny(), &cfg, &[1e-3, 1e3], 2, 9).unwrap();
        assert_eq!(a, b);
        assert!(kappa_search(&tiny(), &cfg, &[], 2, 0).is_err());
        let cands = kappa_candidates(3, -4.0, 0.0);
        assert_eq!(cands.len(), 10);
        assert!(cands.iter().all(|&k| (1e-4..=1.0).contains(&k)));
    }

    #[test]
    fn config_validation() {
        assert!(DeepConfig { batch_size: 0, ..quick() }.validate().is_err());
        assert!(DeepConfig { convergence_threshold: Some(1.5), ..quick() }.validate().is_err());
        let tau = AgentSettings { tau: -0.1, ..AgentSettings::default() };
        assert!(DeepConfig { agent: tau, ..quick() }.validate().is_err());
    }
}
