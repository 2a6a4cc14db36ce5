//! Decomposition of the Bellman maximization by row totals:
//!
//!   max_Q [R∘Q + γ W(x - q̄)] = max_{r ≤ x} [G(r) + γ W(x - r)]
//!
//! where G(r) is the best reward with row sums exactly r. G and its
//! lexicographically smallest maximizer are independent of the period, so
//! they are computed once per instance.

use crate::env::{MatchingMatrix, ProblemInstance, StateSpace};
use crate::error::Result;

use super::transport::best_with_row_totals;

#[derive(Clone, Debug)]
pub(crate) struct RowTotalChoices {
    dims: usize,
    /// row totals, flattened `dims` per choice
    totals: Vec<u32>,
    /// index of r on the state grid; idx(x - r) = idx(x) - offset
    offsets: Vec<usize>,
    gains: Vec<f64>,
    matchings: Vec<MatchingMatrix>,
}

impl RowTotalChoices {
    pub(crate) fn new(instance: &ProblemInstance, space: &StateSpace) -> Result<Self> {
        let supply: u64 = instance.capacities().iter().map(|&c| u64::from(c)).sum();
        let mut out = Self {
            dims: space.dims(),
            totals: Vec::new(),
            offsets: Vec::new(),
            gains: Vec::new(),
            matchings: Vec::new(),
        };
        let mut r = vec![0u32; space.dims()];
        for idx in 0..space.len() {
            space.components(idx, &mut r);
            if r.iter().map(|&v| u64::from(v)).sum::<u64>() > supply {
                continue;
            }
            if let Some(sol) = best_with_row_totals(&r, instance.capacities(), instance.reward())? {
                out.totals.extend_from_slice(&r);
                out.offsets.push(idx);
                out.gains.push(sol.objective);
                out.matchings.push(sol.matching);
            }
        }
        Ok(out)
    }

    pub(crate) fn matching(&self, choice: usize) -> &MatchingMatrix {
        &self.matchings[choice]
    }

    fn fits(&self, choice: usize, x: &[u32]) -> bool {
        self.totals[choice * self.dims..(choice + 1) * self.dims].iter().zip(x).all(|(r, xi)| r <= xi)
    }

    fn scored<'a>(
        &'a self,
        x_idx: usize,
        x: &'a [u32],
        gamma: f64,
        post: &'a [f64],
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        (0..self.gains.len())
            .filter(move |&c| self.fits(c, x))
            .map(move |c| (c, self.gains[c] + gamma * post[x_idx - self.offsets[c]]))
    }

    /// Best backed-up value at state x.
    pub(crate) fn best_value(&self, x_idx: usize, x: &[u32], gamma: f64, post: &[f64]) -> f64 {
        self.scored(x_idx, x, gamma, post).map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Best value and the choice whose matching is lexicographically
    /// smallest among those within 1e-9·(1 + |best|) of it.
    pub(crate) fn best_choice(&self, x_idx: usize, x: &[u32], gamma: f64, post: &[f64]) -> (f64, usize) {
        let best = self.best_value(x_idx, x, gamma, post);
        let tol = 1e-9 * (1.0 + best.abs());
        let choice = self
            .scored(x_idx, x, gamma, post)
            .filter(|&(_, v)| v >= best - tol)
            .map(|(c, _)| c)
            .min_by(|&a, &b| self.matchings[a].cmp(&self.matchings[b]))
            .expect("the empty matching always fits");
        (best, choice)
    }
}
