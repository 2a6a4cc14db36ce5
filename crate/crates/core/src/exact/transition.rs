//! Demand-driven transition kernel. The next state depends on (x, Q) only
//! through the post-decision state y = x - min(q̄, x), so every table here is
//! indexed by y over the same truncated grid as the states.

use crate::env::{MatchingMatrix, ProblemInstance, State, StateSpace};
use crate::error::{Error, Result};

pub const DEFAULT_TRANSITION_CAP: usize = 50_000_000;

/// One axis of the kernel: y_i -> [(min(y_i + d, N_d), p_i(d))], merged at
/// the truncation boundary.
#[derive(Clone, Debug)]
struct AxisKernel {
    rows: Vec<Vec<(u32, f64)>>,
}

impl AxisKernel {
    fn new(pmf: &[f64], limit: u32) -> Self {
        let rows = (0..=limit)
            .map(|y| {
                let mut row: Vec<(u32, f64)> = Vec::new();
                for (d, &p) in pmf.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let next = (y as u64 + d as u64).min(u64::from(limit)) as u32;
                    match row.last_mut() {
                        Some((last, mass)) if *last == next => *mass += p,
                        _ => row.push((next, p)),
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }
}

/// Exact expectation W(y) = E_d V(min(y + d, N_d)), applied one axis at a
/// time since demand types are independent.
#[derive(Clone, Debug)]
pub struct ExpectationOperator {
    space: StateSpace,
    kernels: Vec<AxisKernel>,
}

impl ExpectationOperator {
    pub fn new(instance: &ProblemInstance, space: &StateSpace) -> Self {
        let kernels = instance.demand_pmfs().iter().map(|pmf| AxisKernel::new(pmf, space.limit())).collect();
        Self { space: space.clone(), kernels }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.space.len());
        let radix = self.space.limit() as usize + 1;
        let mut current = values.to_vec();
        let mut next = vec![0.0; values.len()];
        for (axis, kernel) in self.kernels.iter().enumerate() {
            let stride = self.space.stride(axis);
            for (idx, out) in next.iter_mut().enumerate() {
                let y = (idx / stride) % radix;
                let base = idx - y * stride;
                *out = kernel.rows[y].iter().map(|&(to, p)| p * current[base + to as usize * stride]).sum();
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }
}

/// Explicit sparse kernel p(x' | x, Q), one row per post-decision state.
#[derive(Clone, Debug)]
pub struct TransitionModel {
    space: StateSpace,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionModel {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn post_decision(x: &State, q: &MatchingMatrix) -> State {
        State::new(x.as_slice().iter().zip(q.row_totals()).map(|(&xi, qi)| xi - qi.min(xi)).collect())
    }

    /// Sparse distribution over next-state indices, sorted by index.
    pub fn distribution(&self, x: &State, q: &MatchingMatrix) -> Result<&[(usize, f64)]> {
        let y = self.space.index(&Self::post_decision(x, q))?;
        Ok(&self.rows[y])
    }

    pub fn post_decision_row(&self, y: usize) -> &[(usize, f64)] {
        &self.rows[y]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }
}

pub fn build_transition_model(instance: &ProblemInstance, state_cap: usize) -> Result<TransitionModel> {
    build_transition_model_with_cap(instance, state_cap, DEFAULT_TRANSITION_CAP)
}

pub fn build_transition_model_with_cap(
    instance: &ProblemInstance,
    state_cap: usize,
    entry_cap: usize,
) -> Result<TransitionModel> {
    let space = StateSpace::for_instance(instance, state_cap)?;
    let kernels: Vec<AxisKernel> =
        instance.demand_pmfs().iter().map(|pmf| AxisKernel::new(pmf, space.limit())).collect();
    let mut comps = vec![0u32; space.dims()];
    let mut total = 0u128;
    for y in 0..space.len() {
        space.components(y, &mut comps);
        total += comps.iter().zip(&kernels).map(|(&c, k)| k.rows[c as usize].len() as u128).product::<u128>();
    }
    if total > entry_cap as u128 {
        return Err(Error::StateSpaceLimit { size: total, cap: entry_cap });
    }

    let rows = (0..space.len())
        .map(|y| {
            space.components(y, &mut comps);
            let mut row = vec![(0usize, 1.0f64)];
            for (axis, (&c, kernel)) in comps.iter().zip(&kernels).enumerate() {
                let stride = space.stride(axis);
                row = row
                    .iter()
                    .flat_map(|&(idx, p)| kernel.rows[c as usize].iter().map(move |&(to, q)| (idx + to as usize * stride, p * q)))
                    .collect();
            }
            row.sort_unstable_by_key(|&(idx, _)| idx);
            row
        })
        .collect();
    Ok(TransitionModel { space, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{worked_example, RewardMatrix, DEFAULT_STATE_CAP};

    fn single_type(pmf: Vec<f64>, cap: u32) -> ProblemInstance {
        ProblemInstance::builder(vec![cap], vec![pmf], RewardMatrix::from_rows(&[vec![1.0]]).unwrap(), 0.9)
            .build()
            .unwrap()
    }

    #[test]
    fn half_half_kernel() {
        let inst = single_type(vec![0.5, 0.5], 1);
        let model = build_transition_model(&inst, DEFAULT_STATE_CAP).unwrap();
        let q = MatchingMatrix::from_rows(&[vec![1]]).unwrap();
        let row = model.distribution(&State::new(vec![2]), &q).unwrap();
        assert_eq!(row, &[(1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn degenerate_chain_empties() {
        let reward = RewardMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let inst = ProblemInstance::builder(vec![3, 3], vec![vec![1.0], vec![1.0]], reward, 0.5)
            .truncation(3)
            .build()
            .unwrap();
        let model = build_transition_model(&inst, DEFAULT_STATE_CAP).unwrap();
        let x = State::new(vec![2, 3]);
        let q = MatchingMatrix::from_rows(&[vec![1, 1], vec![0, 3]]).unwrap();
        assert_eq!(model.distribution(&x, &q).unwrap(), &[(0, 1.0)]);
    }

    #[test]
    fn rows_are_distributions_with_no_mass_below_post_state() {
        let inst = worked_example();
        let model = build_transition_model(&inst, DEFAULT_STATE_CAP).unwrap();
        let space = model.space().clone();
        for (y, row) in model.rows().enumerate() {
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-9);
            let ys = space.state(y);
            for &(to, p) in row {
                assert!(p >= 0.0);
                let xs = space.state(to);
                assert!(xs.as_slice().iter().zip(ys.as_slice()).all(|(a, b)| a >= b));
            }
        }
    }

    #[test]
    fn separable_expectation_matches_dense_rows() {
        let inst = worked_example();
        let model = build_transition_model(&inst, DEFAULT_STATE_CAP).unwrap();
        let op = ExpectationOperator::new(&inst, model.space());
        let values: Vec<f64> = (0..model.space().len()).map(|i| ((i * 37) % 101) as f64 - 50.0).collect();
        let w = op.apply(&values);
        for (y, row) in model.rows().enumerate() {
            let dense: f64 = row.iter().map(|&(to, p)| p * values[to]).sum();
            assert!((dense - w[y]).abs() < 1e-9, "y={y}: {dense} vs {}", w[y]);
        }
    }

    #[test]
    fn entry_cap_is_enforced() {
        let inst = worked_example();
        assert!(build_transition_model_with_cap(&inst, DEFAULT_STATE_CAP, 10).is_err());
    }
}
