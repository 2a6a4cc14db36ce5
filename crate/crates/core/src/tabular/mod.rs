//! Tabular Q-learning and its domain-knowledge regularized variant.

mod divergence;
mod model;
mod qtable;
mod simplex;
mod train;

pub use divergence::{penalty_g, value_penalty_f, DivergenceKind, DivergenceSpec, PenaltySign};
pub use model::{make_prior_policy, PriorPolicy, TabularModel};
pub use qtable::{dk_q_update, q_learning_update, QEntry, QTable, QTableDump};
pub use simplex::{max_policy_f, project_to_simplex, PolicyOptimum, MAX_ITERATIONS, RESIDUAL_TOLERANCE};
pub use train::{train_tabular, LearningConfig, TabularMethod};
pub(crate) use train::Clock;
