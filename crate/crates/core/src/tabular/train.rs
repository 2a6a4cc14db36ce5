use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::divergence::DivergenceSpec;
use super::model::{PriorPolicy, TabularModel};
use super::qtable::{dk_q_update, q_learning_update, QTable};
use crate::env::{is_feasible, step_with_demand, DemandModel};
use crate::error::{Error, Result};
use crate::harness::{ConvergenceDetector, EpisodeRecord, RunRecord};
use crate::rng;
use crate::schedule::{BetaSchedule, ExplorationSchedule, StepSize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TabularMethod {
    QLearning,
    DomainKnowledge { beta: BetaSchedule, divergence: DivergenceSpec },
}

impl TabularMethod {
    pub fn label(&self) -> &'static str {
        match self {
            Self::QLearning => "ql",
            Self::DomainKnowledge { .. } => "dkql",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub exploration: ExplorationSchedule,
    pub step_size: StepSize,
    /// stop once the average-Q metric settles; `None` runs every episode
    pub convergence_threshold: Option<f64>,
    pub wall_clock_cap_secs: Option<f64>,
    /// when false the wall_ms column is written as 0 so logs are reproducible
    pub record_wall_clock: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            episodes: 3000,
            steps_per_episode: 500,
            exploration: ExplorationSchedule::default(),
            step_size: StepSize::default(),
            convergence_threshold: Some(crate::harness::SMALL_THRESHOLD),
            wall_clock_cap_secs: None,
            record_wall_clock: true,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(Error::Config("episode and step caps must be at least 1".into()));
        }
        if let Some(t) = self.convergence_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("convergence threshold must lie in (0, 1), got {t}")));
            }
        }
        self.exploration.validate()?;
        self.step_size.validate()
    }
}

/// Elapsed-time bookkeeping shared by the training loops.
pub(crate) struct Clock {
    start: Instant,
    cap: Option<Duration>,
    record: bool,
}

impl Clock {
    pub(crate) fn new(cap_secs: Option<f64>, record: bool) -> Self {
        Self { start: Instant::now(), cap: cap_secs.map(Duration::from_secs_f64), record }
    }

    pub(crate) fn wall_ms(&self) -> u64 {
        if self.record {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.cap.is_some_and(|cap| self.start.elapsed() >= cap)
    }
}

/// Episodic ε-greedy training over the feasible enumeration. Each episode
/// starts from a uniformly drawn truncated state. `observer` sees the table
/// after every episode.
pub fn train_tabular<F>(
    model: &TabularModel,
    config: &LearningConfig,
    method: &TabularMethod,
    prior: Option<&PriorPolicy>,
    seed: u64,
    mut observer: F,
) -> Result<(QTable, RunRecord)>
where
    F: FnMut(usize, &QTable),
{
    config.validate()?;
    if let TabularMethod::DomainKnowledge { beta, .. } = method {
        beta.validate()?;
        if prior.is_none_or(|p| p.len() != model.state_count()) {
            return Err(Error::Config("domain-knowledge learning needs a prior over every state".into()));
        }
    }
    let instance = model.instance();
    let demand = DemandModel::new(instance);
    let gamma = instance.gamma();
    let mut rng = rng::stream(seed);
    let mut q = QTable::zeros(model);
    let mut record = RunRecord::new(method.label(), seed);
    let mut detector = config.convergence_threshold.map(ConvergenceDetector::new);
    let clock = Clock::new(config.wall_clock_cap_secs, config.record_wall_clock);
    let mut global_step = 0u64;

    for episode in 0..config.episodes {
        let epsilon = config.exploration.epsilon(episode);
        let mut s = rng.gen_range(0..model.state_count());
        let mut x = model.space().state(s);
        let mut episode_reward = 0.0;
        let mut infeasible = 0u64;
        let mut beta_now = 0.0;
        for _ in 0..config.steps_per_episode {
            global_step += 1;
            let explore = rng.gen::<f64>() < epsilon;
            let a = if explore { rng.gen_range(0..model.actions(s).len()) } else { q.greedy(s) };
            let action = &model.actions(s)[a];
            let outcome = step_with_demand(instance, &x, action, demand.sample(&mut rng))?;
            let feasible = is_feasible(&x, action, instance.capacities());
            record.audit.record(&outcome, feasible);
            infeasible += u64::from(!feasible);
            episode_reward += outcome.net_reward;
            let next = model.state_index(&outcome.next_state)?;
            let alpha = config.step_size.alpha(q.bump_visits(s, a)?);
            match method {
                TabularMethod::QLearning => {
                    beta_now = f64::INFINITY;
                    q_learning_update(&mut q, s, a, outcome.net_reward, next, alpha, gamma)?;
                }
                TabularMethod::DomainKnowledge { beta, divergence } => {
                    beta_now = beta.beta_at(global_step);
                    let mu = prior.expect("checked above").row(next);
                    dk_q_update(&mut q, s, a, outcome.net_reward, next, alpha, gamma, beta_now, mu, divergence)?;
                }
            }
            s = next;
            x = outcome.next_state;
        }
        let avg_q = q.average_max();
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
        observer(episode, &q);
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
    Ok((q, record))
}
