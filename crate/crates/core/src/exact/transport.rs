//! Single-period bounded transportation problem solved by successive
//! shortest paths on the bipartite network
//!
//!   source -> row i (cap x_i) -> column j (cost -r_ij) -> sink (cap c_j).
//!
//! Path costs are lexicographic vectors so one pass yields the optimum that
//! is also the smallest matrix in row-major order among all optima.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::env::{MatchingMatrix, RewardMatrix, State};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    pub matching: MatchingMatrix,
    pub objective: f64,
}

/// Which objectives the path costs carry, in priority order: routed flow
/// (when forced), reward, then the row-major cell vector (when lex).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Mode {
    force: bool,
    lex: bool,
}

#[derive(Clone, Debug)]
struct Cost {
    force: i64,
    reward: f64,
    cells: Vec<i64>,
}

#[derive(Clone, Copy, Debug)]
struct EdgeCost {
    force: i64,
    reward: f64,
    cell: Option<usize>,
    sign: i64,
}

impl EdgeCost {
    const ZERO: Self = Self { force: 0, reward: 0.0, cell: None, sign: 0 };

    fn reversed(self) -> Self {
        Self { force: -self.force, reward: -self.reward, cell: self.cell, sign: -self.sign }
    }
}

struct Edge {
    to: usize,
    residual: u32,
    cost: EdgeCost,
}

struct Network {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    tol: f64,
}

impl Network {
    fn new(nodes: usize, tol: f64) -> Self {
        Self { edges: Vec::new(), adjacency: vec![Vec::new(); nodes], tol }
    }

    fn link(&mut self, from: usize, to: usize, cap: u32, cost: EdgeCost) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, residual: cap, cost });
        self.edges.push(Edge { to: from, residual: 0, cost: cost.reversed() });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    /// Compares `base + edge` against `other`.
    fn cmp_extended(&self, base: &Cost, edge: &EdgeCost, other: &Cost) -> Ordering {
        match (base.force + edge.force).cmp(&other.force) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let diff = base.reward + edge.reward - other.reward;
        if diff.abs() > self.tol {
            return if diff < 0.0 { Ordering::Less } else { Ordering::Greater };
        }
        for (k, (&a, &b)) in base.cells.iter().zip(&other.cells).enumerate() {
            let a = if edge.cell == Some(k) { a + edge.sign } else { a };
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    fn is_negative(&self, c: &Cost) -> bool {
        if c.force != 0 {
            return c.force < 0;
        }
        if c.reward.abs() > self.tol {
            return c.reward < 0.0;
        }
        c.cells.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0)
    }

    /// Shortest path tree from `source` by label-correcting search.
    fn shortest_paths(&self, source: usize, cell_count: usize) -> (Vec<Option<Cost>>, Vec<usize>) {
        let nodes = self.adjacency.len();
        let mut dist: Vec<Option<Cost>> = vec![None; nodes];
        let mut parent = vec![usize::MAX; nodes];
        let mut queued = vec![false; nodes];
        let mut queue = VecDeque::new();
        dist[source] = Some(Cost { force: 0, reward: 0.0, cells: vec![0; cell_count] });
        queue.push_back(source);
        queued[source] = true;
        let mut budget = 4 * nodes * self.edges.len() + 16;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            let du = dist[u].clone().expect("queued nodes have labels");
            for &e in &self.adjacency[u] {
                let edge = &self.edges[e];
                if edge.residual == 0 {
                    continue;
                }
                let better = match &dist[edge.to] {
                    None => true,
                    Some(dv) => self.cmp_extended(&du, &edge.cost, dv) == Ordering::Less,
                };
                if better {
                    let mut cand = du.clone();
                    cand.force += edge.cost.force;
                    cand.reward += edge.cost.reward;
                    if let Some(k) = edge.cost.cell {
                        cand.cells[k] += edge.cost.sign;
                    }
                    dist[edge.to] = Some(cand);
                    parent[edge.to] = e;
                    if !queued[edge.to] {
                        queued[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
            budget = budget.saturating_sub(1);
            if budget == 0 {
                break;
            }
        }
        (dist, parent)
    }
}

fn solve(rows: &[u32], capacities: &[u32], reward: &RewardMatrix, mode: Mode) -> Result<(MatchingMatrix, u64)> {
    let (m, n) = (rows.len(), capacities.len());
    if reward.rows() != m || reward.cols() != n {
        return Err(Error::Shape(format!(
            "reward is {}x{} but x has {m} and c has {n} components",
            reward.rows(),
            reward.cols()
        )));
    }
    let scale = reward.as_slice().iter().fold(1.0f64, |acc, r| acc.max(r.abs()));
    let mut net = Network::new(m + n + 2, 1e-9 * scale);
    let (source, sink) = (0, m + n + 1);
    let cell_count = if mode.lex { m * n } else { 0 };
    for (i, &xi) in rows.iter().enumerate() {
        net.link(source, 1 + i, xi, EdgeCost::ZERO);
    }
    let mut cell_edges = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let cost = EdgeCost {
                force: if mode.force { -1 } else { 0 },
                reward: -reward.get(i, j),
                cell: mode.lex.then_some(i * n + j),
                sign: 1,
            };
            let cap = rows[i].min(capacities[j]);
            cell_edges.push(net.link(1 + i, 1 + m + j, cap, cost));
        }
    }
    for (j, &cj) in capacities.iter().enumerate() {
        net.link(1 + m + j, sink, cj, EdgeCost::ZERO);
    }

    let mut flow = 0u64;
    loop {
        let (dist, parent) = net.shortest_paths(source, cell_count);
        let Some(path_cost) = &dist[sink] else { break };
        if !net.is_negative(path_cost) {
            break;
        }
        let mut bottleneck = u32::MAX;
        let mut v = sink;
        while v != source {
            let e = parent[v];
            bottleneck = bottleneck.min(net.edges[e].residual);
            v = net.edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = parent[v];
            net.edges[e].residual -= bottleneck;
            net.edges[e ^ 1].residual += bottleneck;
            v = net.edges[e ^ 1].to;
        }
        flow += u64::from(bottleneck);
    }

    let q = cell_edges.iter().map(|&e| net.edges[e ^ 1].residual).collect();
    Ok((MatchingMatrix::from_row_major(m, n, q)?, flow))
}

fn objective(reward: &RewardMatrix, q: &MatchingMatrix) -> f64 {
    reward.as_slice().iter().zip(q.as_slice()).map(|(r, &v)| r * f64::from(v)).sum()
}

/// Integer Q maximizing R∘Q with row sums ≤ x and column sums ≤ c. Among
/// optimal matrices the row-major lexicographically smallest is returned.
pub fn solve_single_period(x: &State, capacities: &[u32], reward: &RewardMatrix) -> Result<MatchingMatrix> {
    Ok(solve(x.as_slice(), capacities, reward, Mode { force: false, lex: true })?.0)
}

pub fn solve_transport(x: &State, capacities: &[u32], reward: &RewardMatrix) -> Result<TransportSolution> {
    let matching = solve_single_period(x, capacities, reward)?;
    let objective = objective(reward, &matching);
    Ok(TransportSolution { matching, objective })
}

/// Optimal single-period objective without the tie-break pass.
pub fn single_period_value(x: &State, capacities: &[u32], reward: &RewardMatrix) -> Result<f64> {
    let (q, _) = solve(x.as_slice(), capacities, reward, Mode { force: false, lex: false })?;
    Ok(objective(reward, &q))
}

/// Best matching whose row sums equal `rows` exactly and whose column sums
/// respect capacity, lexicographically smallest among optima; `None` when no
/// such matching exists.
pub fn best_with_row_totals(
    rows: &[u32],
    capacities: &[u32],
    reward: &RewardMatrix,
) -> Result<Option<TransportSolution>> {
    let demand: u64 = rows.iter().map(|&r| u64::from(r)).sum();
    let supply: u64 = capacities.iter().map(|&c| u64::from(c)).sum();
    if demand > supply {
        return Ok(None);
    }
    let (matching, flow) = solve(rows, capacities, reward, Mode { force: true, lex: true })?;
    Ok((flow == demand).then(|| TransportSolution { objective: objective(reward, &matching), matching }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{enumerate_feasible_actions, matching_reward};

    fn worked_r() -> RewardMatrix {
        RewardMatrix::from_rows(&[vec![10.0, 7.0], vec![5.0, 8.0]]).unwrap()
    }

    #[test]
    fn worked_single_period() {
        let q = solve_single_period(&State::new(vec![8, 7]), &[6, 5], &worked_r()).unwrap();
        assert_eq!(q, MatchingMatrix::from_rows(&[vec![6, 0], vec![0, 5]]).unwrap());
    }

    #[test]
    fn zero_capacity_gives_zero() {
        let q = solve_single_period(&State::new(vec![8, 7]), &[0, 0], &worked_r()).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn brute_force_small_case() {
        // Enumerated by hand: feasible matrices are 0 and [[0,1],[0,0]].
        let x = State::new(vec![1, 0]);
        let sol = solve_transport(&x, &[0, 1], &worked_r()).unwrap();
        assert_eq!(sol.matching, MatchingMatrix::from_rows(&[vec![0, 1], vec![0, 0]]).unwrap());
        assert_eq!(sol.objective, 7.0);
    }

    #[test]
    fn ties_resolve_to_smallest_matrix() {
        let r = RewardMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = State::new(vec![2, 2]);
        let q = solve_single_period(&x, &[2, 2], &r).unwrap();
        let acts = enumerate_feasible_actions(&x, &[2, 2], 10_000).unwrap();
        let best = acts.iter().map(|a| matching_reward(&r, a).unwrap()).fold(f64::MIN, f64::max);
        let first = acts.iter().find(|a| matching_reward(&r, a).unwrap() == best).unwrap();
        assert_eq!(&q, first);
        assert_eq!(q, MatchingMatrix::from_rows(&[vec![0, 2], vec![2, 0]]).unwrap());
    }

    #[test]
    fn nonpositive_rewards_are_not_matched() {
        let r = RewardMatrix::from_rows(&[vec![0.0, -1.0]]).unwrap();
        let q = solve_single_period(&State::new(vec![3]), &[3, 3], &r).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn exact_row_totals() {
        let r = worked_r();
        let g = |rows: &[u32], c: &[u32], r: &RewardMatrix| {
            best_with_row_totals(rows, c, r).unwrap().map(|s| s.objective)
        };
        assert_eq!(g(&[6, 5], &[6, 5], &r), Some(100.0));
        assert_eq!(g(&[0, 6], &[6, 5], &r), Some(5.0 + 5.0 * 8.0));
        assert_eq!(g(&[7, 4], &[6, 5], &r), Some(60.0 + 7.0 + 4.0 * 8.0));
        assert_eq!(g(&[12, 0], &[6, 5], &r), None);
        let neg = RewardMatrix::from_rows(&[vec![-2.0]]).unwrap();
        assert_eq!(g(&[1], &[1], &neg), Some(-2.0));
        let flat = RewardMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let s = best_with_row_totals(&[1, 1], &[2, 2], &flat).unwrap().unwrap();
        assert_eq!(s.matching, MatchingMatrix::from_rows(&[vec![0, 1], vec![0, 1]]).unwrap());
    }

    #[test]
    fn shape_mismatch_is_error() {
        assert!(solve_single_period(&State::new(vec![1]), &[1, 1], &worked_r()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn case() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, RewardMatrix)> {
            (1usize..=3, 1usize..=3).prop_flat_map(|(m, n)| {
                (
                    proptest::collection::vec(0u32..=4, m),
                    proptest::collection::vec(0u32..=4, n),
                    proptest::collection::vec(-3i32..=9, m * n),
                )
                    .prop_map(move |(x, c, r)| {
                        let r = r.into_iter().map(f64::from).collect();
                        (x, c, RewardMatrix::from_row_major(m, n, r).unwrap())
                    })
            })
        }

        proptest! {
            #[test]
            fn matches_enumeration((x, c, r) in case()) {
                let x = State::new(x);
                let acts = enumerate_feasible_actions(&x, &c, 1_000_000).unwrap();
                let scores: Vec<f64> = acts.iter().map(|a| matching_reward(&r, a).unwrap()).collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let first = &acts[scores.iter().position(|&s| s == best).unwrap()];
                let sol = solve_transport(&x, &c, &r).unwrap();
                prop_assert_eq!(sol.objective, best);
                prop_assert_eq!(&sol.matching, first);
                prop_assert_eq!(single_period_value(&x, &c, &r).unwrap(), best);
            }

            #[test]
            fn exact_rows_match_enumeration((x, c, r) in case()) {
                let state = State::new(x.clone());
                let acts = enumerate_feasible_actions(&state, &c, 1_000_000).unwrap();
                let exact: Vec<_> = acts.iter().filter(|a| a.row_totals() == x).collect();
                let got = best_with_row_totals(&x, &c, &r).unwrap();
                match exact.iter().map(|a| matching_reward(&r, a).unwrap()).reduce(f64::max) {
                    None => prop_assert!(got.is_none()),
                    Some(best) => {
                        let got = got.unwrap();
                        prop_assert_eq!(got.objective, best);
                        let first = exact.iter().find(|a| matching_reward(&r, a).unwrap() == best).unwrap();
                        prop_assert_eq!(&got.matching, *first);
                    }
                }
            }
        }
    }
}
