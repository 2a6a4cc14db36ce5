//! Dynamic many-to-many demand-capacity matching as a Markov decision
//! process, with exact dynamic-programming oracles, domain-knowledge
//! regularized Q-learning, and a DDPG actor-critic variant.

pub mod ddpg;
pub mod env;
pub mod error;
pub mod exact;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod schedule;
pub mod tabular;

pub use env::{MatchingMatrix, ProblemInstance, RewardMatrix, State, StateSpace, StepOutcome};
pub use error::{Error, Result};
