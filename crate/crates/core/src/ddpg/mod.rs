//! Actor-critic learner over relaxed matchings, with the domain-knowledge
//! critic target. Plain DDPG is the same code path with β = 10^12.

mod action;
mod agent;
mod checkpoint;
mod replay;
mod train;

pub use action::{perturb_action, state_features, transform_action};
pub use agent::{
    actor_gradient, actor_update, compute_dk_target, critic_gradient, critic_update, deep_penalty, dk_target, soft_update,
    AgentPair, AgentSettings, DeepPrior, NetworkShape,
};
pub use checkpoint::{AgentCheckpoint, AgentManifest};
pub use replay::{Experience, ReplayBuffer, DEFAULT_REPLAY_CAPACITY};
pub use train::{
    deep_average_q, kappa_candidates, kappa_search, metric_states, random_state, train_agent, DeepConfig, DeepMethod, KappaChoice,
    DEFAULT_METRIC_SAMPLE_CAP,
};
