//! Schedules shared by the tabular and deep learners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// β used to reduce the domain-knowledge target to the plain one.
pub const UNREGULARIZED_BETA: f64 = 1e12;

/// Regularization weight β_t, with t the global step starting at 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BetaSchedule {
    Fixed { beta: f64 },
    Linear { kappa: f64 },
}

impl BetaSchedule {
    pub fn unregularized() -> Self {
        Self::Fixed { beta: UNREGULARIZED_BETA }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            Self::Fixed { beta } => beta,
            Self::Linear { kappa } => kappa,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("β schedule parameter must be positive and finite, got {v}")))
        }
    }

    pub fn beta_at(&self, step: u64) -> f64 {
        match *self {
            Self::Fixed { beta } => beta,
            Self::Linear { kappa } => kappa * step.max(1) as f64,
        }
    }
}

/// ε(e) = max(floor, start·(floor/start)^(e/horizon)) over episodes e, plus
/// the Gaussian noise scale used by the deep learners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    pub start: f64,
    pub floor: f64,
    pub horizon: usize,
    pub sigma: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self { start: 1.0, floor: 0.1, horizon: 300, sigma: 0.1 }
    }
}

impl ExplorationSchedule {
    pub const SMALL_HORIZON: usize = 300;
    pub const LARGE_HORIZON: usize = 1000;

    pub fn constant(epsilon: f64) -> Self {
        Self { start: epsilon, floor: epsilon, horizon: 1, sigma: 0.1 }
    }

    pub fn with_horizon(self, horizon: usize) -> Self {
        Self { horizon, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.floor)
            && (self.floor..=1.0).contains(&self.start)
            && self.sigma >= 0.0
            && (self.floor > 0.0 || self.start == 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid exploration schedule {self:?}")))
        }
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.start == self.floor || self.horizon == 0 || episode >= self.horizon {
            return self.floor;
        }
        let frac = episode as f64 / self.horizon as f64;
        (self.start * (self.floor / self.start).powf(frac)).max(self.floor)
    }
}

/// Per-pair step size α = 1/(1 + visits)^exponent, visits counted before the
/// update. Exponents in (0.5, 1] satisfy Σα = ∞ and Σα² < ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSize {
    pub exponent: f64,
}

impl Default for StepSize {
    fn default() -> Self {
        Self { exponent: 0.85 }
    }
}

impl StepSize {
    pub fn validate(&self) -> Result<()> {
        if self.exponent > 0.5 && self.exponent <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("step-size exponent must lie in (0.5, 1], got {}", self.exponent)))
        }
    }

    pub fn alpha(&self, visits: u64) -> f64 {
        (1.0 + visits as f64).powf(-self.exponent)
    }
}
