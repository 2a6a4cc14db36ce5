use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{
    capacity_penalty, demand_penalty, enumerate_feasible_actions, matching_reward, MatchingMatrix,
    ProblemInstance, State, StateSpace, DEFAULT_ACTION_CAP, DEFAULT_STATE_CAP,
};
use crate::error::{Error, Result};

use super::choices::RowTotalChoices;
use super::transition::{ExpectationOperator, TransitionModel};
use super::transport::solve_single_period;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 1_000_000;

/// Values and one optimal action per state for a single period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodTable {
    pub values: Vec<f64>,
    pub actions: Vec<MatchingMatrix>,
}

/// Finite-horizon solution: `periods[t - 1]` holds V_t for t = 1..=T+1, the
/// last one being the all-zero terminal table.
#[derive(Clone, Debug)]
pub struct ValueTable {
    space: StateSpace,
    periods: Vec<PeriodTable>,
}

impl ValueTable {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn horizon(&self) -> usize {
        self.periods.len() - 1
    }

    pub fn periods(&self) -> &[PeriodTable] {
        &self.periods
    }

    /// Period t, 1-based.
    pub fn period(&self, t: usize) -> &PeriodTable {
        &self.periods[t - 1]
    }

    pub fn value(&self, t: usize, x: &State) -> Result<f64> {
        Ok(self.period(t).values[self.space.index(x)?])
    }

    pub fn action(&self, t: usize, x: &State) -> Result<&MatchingMatrix> {
        Ok(&self.period(t).actions[self.space.index(x)?])
    }
}

struct Solver {
    space: StateSpace,
    expectation: ExpectationOperator,
    choices: RowTotalChoices,
    gamma: f64,
}

impl Solver {
    fn new(instance: &ProblemInstance, state_cap: usize) -> Result<Self> {
        let space = StateSpace::for_instance(instance, state_cap)?;
        let expectation = ExpectationOperator::new(instance, &space);
        let choices = RowTotalChoices::new(instance, &space)?;
        Ok(Self { space, expectation, choices, gamma: instance.gamma() })
    }

    fn sweep(&self, post: &[f64]) -> Vec<f64> {
        (0..self.space.len())
            .into_par_iter()
            .map_init(
                || vec![0u32; self.space.dims()],
                |x, idx| {
                    self.space.components(idx, x);
                    self.choices.best_value(idx, x, self.gamma, post)
                },
            )
            .collect()
    }

    fn greedy(&self, post: &[f64]) -> PeriodTable {
        let (values, actions) = (0..self.space.len())
            .into_par_iter()
            .map_init(
                || vec![0u32; self.space.dims()],
                |x, idx| {
                    self.space.components(idx, x);
                    let (v, c) = self.choices.best_choice(idx, x, self.gamma, post);
                    (v, self.choices.matching(c).clone())
                },
            )
            .unzip();
        PeriodTable { values, actions }
    }
}

pub fn backward_induction(instance: &ProblemInstance) -> Result<ValueTable> {
    backward_induction_with_cap(instance, DEFAULT_STATE_CAP)
}

/// V_t(x) = max_Q [R∘Q + γ E V_{t+1}(x')] for t = T..1 with V_{T+1} = 0.
pub fn backward_induction_with_cap(instance: &ProblemInstance, state_cap: usize) -> Result<ValueTable> {
    if instance.horizon() == 0 {
        return Err(Error::Config("backward induction needs a horizon of at least one period".into()));
    }
    let solver = Solver::new(instance, state_cap)?;
    let n = solver.space.len();
    let dims = (instance.m(), instance.n());
    let terminal = PeriodTable { values: vec![0.0; n], actions: vec![MatchingMatrix::zeros(dims.0, dims.1); n] };
    let mut periods = vec![terminal];
    for _ in 0..instance.horizon() {
        let post = solver.expectation.apply(&periods.last().expect("nonempty").values);
        periods.push(solver.greedy(&post));
    }
    periods.reverse();
    Ok(ValueTable { space: solver.space, periods })
}

/// Stationary optimal values on the truncated grid.
#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub space: StateSpace,
    pub values: Vec<f64>,
    /// E V(min(y + d, N_d)) for every post-decision state y
    pub post_values: Vec<f64>,
    pub policy: Vec<MatchingMatrix>,
    /// max-norm change of the final sweep
    pub residual: f64,
    pub sweeps: usize,
}

impl StationarySolution {
    pub fn value(&self, x: &State) -> Result<f64> {
        Ok(self.values[self.space.index(x)?])
    }

    pub fn action(&self, x: &State) -> Result<&MatchingMatrix> {
        Ok(&self.policy[self.space.index(x)?])
    }
}

pub fn stationary_values(instance: &ProblemInstance, tol: f64) -> Result<StationarySolution> {
    stationary_values_with_cap(instance, tol, DEFAULT_STATE_CAP)
}

/// Value iteration with sweeps until the max-norm change drops below
/// tol·(1 - γ)/2, which leaves the values within tol of the fixed point.
pub fn stationary_values_with_cap(instance: &ProblemInstance, tol: f64, state_cap: usize) -> Result<StationarySolution> {
    let solver = Solver::new(instance, state_cap)?;
    let gamma = instance.gamma();
    let target = tol * (1.0 - gamma) / 2.0;
    let mut values = vec![0.0; solver.space.len()];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while residual >= target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { residual });
        }
        let post = solver.expectation.apply(&values);
        let next = solver.sweep(&post);
        residual = max_abs_diff(&next, &values);
        values = next;
        sweeps += 1;
    }
    let post_values = solver.expectation.apply(&values);
    let table = solver.greedy(&post_values);
    Ok(StationarySolution {
        space: solver.space,
        values: table.values,
        post_values,
        policy: table.actions,
        residual,
        sweeps,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Optimal stationary action values over every feasible action of every
/// state. Actions per state are in ascending row-major order.
#[derive(Clone, Debug)]
pub struct QTableExact {
    space: StateSpace,
    actions: Vec<Vec<MatchingMatrix>>,
    values: Vec<Vec<f64>>,
    state_values: Vec<f64>,
    residual: f64,
}

impl QTableExact {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn actions(&self, state: usize) -> &[MatchingMatrix] {
        &self.actions[state]
    }

    pub fn q_values(&self, state: usize) -> &[f64] {
        &self.values[state]
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.values[state][action]
    }

    pub fn action_index(&self, state: usize, action: &MatchingMatrix) -> Option<usize> {
        self.actions[state].binary_search(action).ok()
    }

    /// V*(x) from the value sweep.
    pub fn state_value(&self, state: usize) -> f64 {
        self.state_values[state]
    }

    pub fn state_values(&self) -> &[f64] {
        &self.state_values
    }

    pub fn max_q(&self, state: usize) -> f64 {
        self.values[state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action within 1e-9·(1 + |max|) of the maximum.
    pub fn greedy_index(&self, state: usize) -> usize {
        let best = self.max_q(state);
        let tol = 1e-9 * (1.0 + best.abs());
        self.values[state].iter().position(|&v| v >= best - tol).expect("every state has the zero action")
    }

    pub fn greedy_policy(&self) -> Vec<MatchingMatrix> {
        (0..self.space.len()).map(|s| self.actions[s][self.greedy_index(s)].clone()).collect()
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn pair_count(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }
}

pub fn stationary_value_iteration(instance: &ProblemInstance, tol: f64) -> Result<QTableExact> {
    stationary_value_iteration_with_caps(instance, tol, DEFAULT_STATE_CAP, DEFAULT_ACTION_CAP)
}

/// Q*(x, Q) = R∘Q + γ E V*(x') over feasible actions, with V* from value
/// iteration. `action_cap` bounds the total number of (state, action) pairs.
pub fn stationary_value_iteration_with_caps(
    instance: &ProblemInstance,
    tol: f64,
    state_cap: usize,
    action_cap: usize,
) -> Result<QTableExact> {
    let solution = stationary_values_with_cap(instance, tol, state_cap)?;
    let space = solution.space.clone();
    let gamma = instance.gamma();
    let mut remaining = action_cap;
    let mut actions = Vec::with_capacity(space.len());
    let mut values = Vec::with_capacity(space.len());
    for (idx, x) in space.states().enumerate() {
        let acts = enumerate_feasible_actions(&x, instance.capacities(), remaining)
            .map_err(|_| Error::ActionLimit { cap: action_cap })?;
        remaining -= acts.len();
        let q = acts
            .iter()
            .map(|a| {
                let y = TransitionModel::post_decision(&x, a);
                Ok(matching_reward(instance.reward(), a)? + gamma * solution.post_values[space.index(&y)?])
            })
            .collect::<Result<Vec<f64>>>()?;
        debug_assert_eq!(idx, actions.len());
        actions.push(acts);
        values.push(q);
    }
    let residual = gamma * solution.residual;
    Ok(QTableExact { space, actions, values, state_values: solution.values, residual })
}

/// Net one-step reward and post-decision index of a policy at every state.
fn policy_tables(instance: &ProblemInstance, policy: &[MatchingMatrix]) -> Result<(StateSpace, Vec<f64>, Vec<usize>)> {
    let space = StateSpace::for_instance(instance, DEFAULT_STATE_CAP)?;
    if policy.len() != space.len() {
        return Err(Error::Shape(format!("policy covers {} states, grid has {}", policy.len(), space.len())));
    }
    let mut rewards = Vec::with_capacity(space.len());
    let mut posts = Vec::with_capacity(space.len());
    for (x, q) in space.states().zip(policy) {
        let raw = matching_reward(instance.reward(), q)?;
        let u = demand_penalty(&x, q, instance.k1());
        let v = capacity_penalty(q, instance.capacities(), instance.k2());
        rewards.push(raw - u - v);
        posts.push(space.index(&TransitionModel::post_decision(&x, q))?);
    }
    Ok((space, rewards, posts))
}

/// Fixed point of V = r_π + γ P_π V, within tol in max norm. Rewards are
/// net of penalties so infeasible policies are valued as executed.
pub fn evaluate_policy(instance: &ProblemInstance, policy: &[MatchingMatrix], tol: f64) -> Result<Vec<f64>> {
    let (space, rewards, posts) = policy_tables(instance, policy)?;
    let expectation = ExpectationOperator::new(instance, &space);
    let gamma = instance.gamma();
    let target = tol * (1.0 - gamma) / 2.0;
    let mut values = rewards.clone();
    let mut sweeps = 0;
    loop {
        let post = expectation.apply(&values);
        let next: Vec<f64> = rewards.iter().zip(&posts).map(|(r, &y)| r + gamma * post[y]).collect();
        let residual = max_abs_diff(&next, &values);
        values = next;
        sweeps += 1;
        if residual < target {
            return Ok(values);
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { residual });
        }
    }
}

/// Expected discounted reward of a stationary policy over `horizon` periods
/// from every state, with zero terminal value.
pub fn evaluate_policy_finite(
    instance: &ProblemInstance,
    policy: &[MatchingMatrix],
    horizon: usize,
) -> Result<Vec<f64>> {
    let (space, rewards, posts) = policy_tables(instance, policy)?;
    let expectation = ExpectationOperator::new(instance, &space);
    let mut values = vec![0.0; space.len()];
    for _ in 0..horizon {
        let post = expectation.apply(&values);
        values = rewards.iter().zip(&posts).map(|(r, &y)| r + instance.gamma() * post[y]).collect();
    }
    Ok(values)
}

/// Myopic policy: the single-period optimum at every state.
pub fn single_period_policy(instance: &ProblemInstance) -> Result<Vec<MatchingMatrix>> {
    let space = StateSpace::for_instance(instance, DEFAULT_STATE_CAP)?;
    space.states().map(|x| solve_single_period(&x, instance.capacities(), instance.reward())).collect()
}

pub fn zero_policy(instance: &ProblemInstance) -> Result<Vec<MatchingMatrix>> {
    let space = StateSpace::for_instance(instance, DEFAULT_STATE_CAP)?;
    Ok(vec![MatchingMatrix::zeros(instance.m(), instance.n()); space.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{worked_example, worked_example_state, RewardMatrix};
    use crate::exact::build_transition_model;

    fn small_instance(gamma: f64, horizon: usize) -> ProblemInstance {
        let reward = RewardMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        ProblemInstance::builder(vec![1, 2], vec![vec![0.3, 0.5, 0.2], vec![0.6, 0.0, 0.4]], reward, gamma)
            .horizon(horizon)
            .truncation(3)
            .build()
            .unwrap()
    }

    /// Backward induction by enumerating every feasible action against the
    /// dense transition rows.
    fn brute_backward(instance: &ProblemInstance) -> Vec<(Vec<f64>, Vec<MatchingMatrix>)> {
        let model = build_transition_model(instance, DEFAULT_STATE_CAP).unwrap();
        let space = model.space().clone();
        let mut next = vec![0.0; space.len()];
        let mut out = Vec::new();
        for _ in 0..instance.horizon() {
            let mut values = Vec::new();
            let mut actions = Vec::new();
            for x in space.states() {
                let acts = enumerate_feasible_actions(&x, instance.capacities(), DEFAULT_ACTION_CAP).unwrap();
                let scores: Vec<f64> = acts
                    .iter()
                    .map(|a| {
                        let ev: f64 = model.distribution(&x, a).unwrap().iter().map(|&(to, p)| p * next[to]).sum();
                        matching_reward(instance.reward(), a).unwrap() + instance.gamma() * ev
                    })
                    .collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let pick = scores.iter().position(|&s| s >= best - 1e-9 * (1.0 + best.abs())).unwrap();
                values.push(best);
                actions.push(acts[pick].clone());
            }
            next = values.clone();
            out.push((values, actions));
        }
        out.reverse();
        out
    }

    #[test]
    fn backward_induction_matches_enumeration() {
        let inst = small_instance(0.9, 4);
        let table = backward_induction(&inst).unwrap();
        let brute = brute_backward(&inst);
        for (t, (values, actions)) in brute.iter().enumerate() {
            let period = table.period(t + 1);
            for s in 0..values.len() {
                assert!((period.values[s] - values[s]).abs() < 1e-9);
                assert_eq!(period.actions[s], actions[s], "t={} s={s}", t + 1);
            }
        }
        assert!(table.period(5).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_reward_gives_zero_values() {
        let inst = small_instance(0.9, 3).with_reward(RewardMatrix::zeros(2, 2)).unwrap();
        let table = backward_induction(&inst).unwrap();
        assert!(table.periods().iter().all(|p| p.values.iter().all(|&v| v == 0.0)));
        assert!(table.periods().iter().all(|p| p.actions.iter().all(MatchingMatrix::is_zero)));
    }

    #[test]
    fn one_period_reduces_to_single_period_solver() {
        let inst = worked_example().with_horizon(1);
        let table = backward_induction(&inst).unwrap();
        for x in table.space().states() {
            let q = solve_single_period(&x, inst.capacities(), inst.reward()).unwrap();
            assert_eq!(table.action(1, &x).unwrap(), &q);
        }
    }

    #[test]
    fn degenerate_demand_one_period() {
        let reward = RewardMatrix::from_rows(&[vec![2.0, 7.0], vec![5.0, 1.0]]).unwrap();
        let inst = ProblemInstance::builder(vec![2, 3], vec![vec![1.0], vec![1.0]], reward, 0.9)
            .horizon(1)
            .truncation(4)
            .build()
            .unwrap();
        let table = backward_induction(&inst).unwrap();
        for x in table.space().states() {
            let q = solve_single_period(&x, inst.capacities(), inst.reward()).unwrap();
            assert_eq!(table.action(1, &x).unwrap(), &q);
        }
    }

    #[test]
    fn zero_horizon_is_rejected() {
        assert!(matches!(backward_induction(&small_instance(0.9, 0)), Err(Error::Config(_))));
    }

    #[test]
    fn myopic_q_is_immediate_reward() {
        let inst = small_instance(0.0, 1);
        let q = stationary_value_iteration(&inst, DEFAULT_TOLERANCE).unwrap();
        for s in 0..q.space().len() {
            for (a, act) in q.actions(s).iter().enumerate() {
                assert_eq!(q.q(s, a), matching_reward(inst.reward(), act).unwrap());
            }
        }
    }

    #[test]
    fn q_table_is_consistent_with_state_values() {
        let inst = small_instance(0.9, 1);
        let tol = 1e-8;
        let q = stationary_value_iteration(&inst, tol).unwrap();
        assert!(q.residual() < tol);
        for s in 0..q.space().len() {
            assert!((q.max_q(s) - q.state_value(s)).abs() < tol);
        }
        let greedy = evaluate_policy(&inst, &q.greedy_policy(), tol).unwrap();
        for s in 0..q.space().len() {
            assert!((greedy[s] - q.max_q(s)).abs() < 2.0 * tol);
        }
        let zero = evaluate_policy(&inst, &zero_policy(&inst).unwrap(), tol).unwrap();
        assert!(zero.iter().zip(&greedy).all(|(z, g)| *z <= g + 2.0 * tol));
    }

    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn tiny_instance_matches_policy_enumeration() {
        let inst = ProblemInstance::builder(
            vec![1],
            vec![vec![0.5, 0.5]],
            RewardMatrix::from_rows(&[vec![3.0]]).unwrap(),
            0.9,
        )
        .truncation(2)
        .build()
        .unwrap();
        let q = stationary_value_iteration(&inst, 1e-10).unwrap();
        let model = build_transition_model(&inst, DEFAULT_STATE_CAP).unwrap();
        let space = model.space().clone();
        let choices: Vec<Vec<MatchingMatrix>> = space
            .states()
            .map(|x| enumerate_feasible_actions(&x, inst.capacities(), 100).unwrap())
            .collect();
        let mut best = vec![f64::NEG_INFINITY; space.len()];
        let total: usize = choices.iter().map(Vec::len).product();
        for code in 0..total {
            let mut rest = code;
            let policy: Vec<&MatchingMatrix> = choices
                .iter()
                .map(|c| {
                    let a = &c[rest % c.len()];
                    rest /= c.len();
                    a
                })
                .collect();
            let mut a = vec![vec![0.0; space.len()]; space.len()];
            let mut b = vec![0.0; space.len()];
            for (s, x) in space.states().enumerate() {
                a[s][s] += 1.0;
                for &(to, p) in model.distribution(&x, policy[s]).unwrap() {
                    a[s][to] -= inst.gamma() * p;
                }
                b[s] = matching_reward(inst.reward(), policy[s]).unwrap();
            }
            let v = solve_dense(a, b);
            for s in 0..space.len() {
                best[s] = best[s].max(v[s]);
            }
        }
        for s in 0..space.len() {
            assert!((q.max_q(s) - best[s]).abs() < 1e-8, "state {s}: {} vs {}", q.max_q(s), best[s]);
        }
    }

    #[test]
    fn myopic_policy_is_suboptimal_on_worked_example() {
        let inst = worked_example();
        let table = backward_induction(&inst).unwrap();
        let x = worked_example_state();
        let idx = table.space().index(&x).unwrap();
        let myopic = evaluate_policy_finite(&inst, &single_period_policy(&inst).unwrap(), inst.horizon()).unwrap();
        let optimal = table.value(1, &x).unwrap();
        assert!(myopic[idx] < optimal, "{} vs {optimal}", myopic[idx]);
    }

    #[test]
    fn stationary_policy_dominates() {
        let inst = small_instance(0.8, 1);
        let tol = 1e-9;
        let sol = stationary_values(&inst, tol).unwrap();
        let opt = evaluate_policy(&inst, &sol.policy, tol).unwrap();
        for other in [zero_policy(&inst).unwrap(), single_period_policy(&inst).unwrap()] {
            let v = evaluate_policy(&inst, &other, tol).unwrap();
            assert!(opt.iter().zip(&v).all(|(o, v)| *o >= v - 2.0 * tol));
        }
    }

    #[test]
    fn wrong_policy_length_is_rejected() {
        let inst = small_instance(0.8, 1);
        assert!(matches!(evaluate_policy(&inst, &[], 1e-6), Err(Error::Shape(_))));
    }
}
