//! Exact solvers: the single-period transportation optimum, finite-horizon
//! backward induction, stationary value iteration and policy evaluation.

mod choices;
mod dp;
mod oracle;
mod transition;
mod transport;

pub use dp::{
    backward_induction, backward_induction_with_cap, evaluate_policy, evaluate_policy_finite, single_period_policy,
    stationary_value_iteration, stationary_value_iteration_with_caps, stationary_values, stationary_values_with_cap,
    zero_policy, PeriodTable, QTableExact, StationarySolution, ValueTable, DEFAULT_TOLERANCE,
};
pub use oracle::OracleDump;
pub use transition::{
    build_transition_model, build_transition_model_with_cap, ExpectationOperator, TransitionModel,
    DEFAULT_TRANSITION_CAP,
};
pub use transport::{best_with_row_totals, single_period_value, solve_single_period, solve_transport, TransportSolution};
