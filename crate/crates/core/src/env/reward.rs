//! Reward models, infeasibility penalties and the feasibility test.

use serde::{Deserialize, Serialize};

use super::matrix::{MatchingMatrix, RewardMatrix, State};
use crate::error::{Error, Result};

/// Horizontal (preference) model: r_ij = prize - δ_ij.
pub fn build_horizontal_reward(prize: f64, delta: &[Vec<f64>]) -> Result<RewardMatrix> {
    let delta = RewardMatrix::from_rows(delta)?;
    if delta.as_slice().iter().any(|d| *d < 0.0) {
        return Err(Error::InvalidInstance("distances must be nonnegative".into()));
    }
    let data = delta.as_slice().iter().map(|d| prize - d).collect();
    RewardMatrix::from_row_major(delta.rows(), delta.cols(), data)
}

/// Increasing affine map `scale * v + offset` (scale > 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub const IDENTITY: Self = Self { scale: 1.0, offset: 0.0 };

    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!("quality map must be increasing, got scale {scale}")));
        }
        Ok(Self { scale, offset })
    }

    pub fn apply(&self, v: f64) -> f64 {
        self.scale * v + self.offset
    }
}

/// Vertical (quality) model with identity quality maps: r_ij = a_i + b_j.
pub fn build_vertical_reward(a: &[f64], b: &[f64]) -> Result<RewardMatrix> {
    build_vertical_reward_with(a, AffineMap::IDENTITY, b, AffineMap::IDENTITY)
}

pub fn build_vertical_reward_with(
    a: &[f64],
    demand_map: AffineMap,
    b: &[f64],
    supply_map: AffineMap,
) -> Result<RewardMatrix> {
    let data = a
        .iter()
        .flat_map(|&ai| b.iter().map(move |&bj| demand_map.apply(ai) + supply_map.apply(bj)))
        .collect();
    RewardMatrix::from_row_major(a.len(), b.len(), data)
}

/// R ∘ Q = Σ_ij r_ij q_ij
pub fn matching_reward(reward: &RewardMatrix, q: &MatchingMatrix) -> Result<f64> {
    if reward.rows() != q.rows() || reward.cols() != q.cols() {
        return Err(Error::Shape(format!(
            "reward is {}x{}, matching is {}x{}",
            reward.rows(),
            reward.cols(),
            q.rows(),
            q.cols()
        )));
    }
    Ok(reward
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(r, &v)| r * f64::from(v))
        .sum())
}

/// u(x, Q) = k1 Σ_i max(0, q̄_i - x_i)
pub fn demand_penalty(x: &State, q: &MatchingMatrix, k1: f64) -> f64 {
    let excess: u64 = q
        .row_totals()
        .iter()
        .zip(x.as_slice())
        .map(|(&total, &xi)| u64::from(total.saturating_sub(xi)))
        .sum();
    k1 * excess as f64
}

/// v(Q) = k2 Σ_j max(0, q̄_j - c_j)
pub fn capacity_penalty(q: &MatchingMatrix, capacities: &[u32], k2: f64) -> f64 {
    let excess: u64 = q
        .col_totals()
        .iter()
        .zip(capacities)
        .map(|(&total, &cj)| u64::from(total.saturating_sub(cj)))
        .sum();
    k2 * excess as f64
}

pub fn is_feasible(x: &State, q: &MatchingMatrix, capacities: &[u32]) -> bool {
    q.row_totals().iter().zip(x.as_slice()).all(|(t, xi)| t <= xi)
        && q.col_totals().iter().zip(capacities).all(|(t, cj)| t <= cj)
}
