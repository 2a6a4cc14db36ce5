//! The matching MDP: instances, states, actions, rewards, penalties and the
//! one-step transition.

mod actions;
mod instance;
mod matrix;
mod reward;
mod space;
mod step;

pub use actions::{count_feasible_actions, enumerate_feasible_actions, DEFAULT_ACTION_CAP};
pub use instance::{default_truncation, InstanceBuilder, InstanceFile, ProblemInstance, FILE_PMF_TOLERANCE};
pub use matrix::{MatchingMatrix, RewardMatrix, State};
pub use reward::{
    build_horizontal_reward, build_vertical_reward, build_vertical_reward_with, capacity_penalty,
    demand_penalty, is_feasible, matching_reward, AffineMap,
};
pub use space::{StateSpace, DEFAULT_STATE_CAP};
pub use step::{next_state, sample_demand, step, step_with_demand, step_with_model, DemandModel, StepOutcome};

/// The 2x2, three-period raw-materials instance used as the worked example:
/// x = (8, 7), c = (6, 5), γ = 0.9, R = [10 7; 5 8].
pub fn worked_example() -> ProblemInstance {
    let reward = RewardMatrix::from_rows(&[vec![10.0, 7.0], vec![5.0, 8.0]]).expect("static shape");
    ProblemInstance::builder(
        vec![6, 5],
        vec![
            vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0, 0.0],
            vec![0.2, 0.0, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0, 0.2],
        ],
        reward,
        0.9,
    )
    .horizon(3)
    .build()
    .expect("static instance is valid")
}

/// Initial outstanding demand of the worked example.
pub fn worked_example_state() -> State {
    State::new(vec![8, 7])
}
