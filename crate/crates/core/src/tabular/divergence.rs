use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    SquaredL2,
    Kl,
}

/// How the divergence enters the value-penalty function. `Penalize` uses
/// g = -h so that moving away from the prior costs value; `Literal` uses
/// g = +h.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySign {
    Penalize,
    Literal,
}

impl PenaltySign {
    fn factor(self) -> f64 {
        match self {
            Self::Penalize => -1.0,
            Self::Literal => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpec {
    pub kind: DivergenceKind,
    /// ε_μ: weight of the uniform mixture applied to μ before KL
    pub smoothing: f64,
    pub sign: PenaltySign,
}

impl Default for DivergenceSpec {
    fn default() -> Self {
        Self::squared_l2()
    }
}

impl DivergenceSpec {
    pub const DEFAULT_SMOOTHING: f64 = 0.01;

    pub fn squared_l2() -> Self {
        Self { kind: DivergenceKind::SquaredL2, smoothing: Self::DEFAULT_SMOOTHING, sign: PenaltySign::Penalize }
    }

    pub fn kl() -> Self {
        Self { kind: DivergenceKind::Kl, smoothing: Self::DEFAULT_SMOOTHING, sign: PenaltySign::Penalize }
    }

    pub fn with_sign(self, sign: PenaltySign) -> Self {
        Self { sign, ..self }
    }

    pub fn with_smoothing(self, smoothing: f64) -> Self {
        Self { smoothing, ..self }
    }

    pub(crate) fn sign_factor(&self) -> f64 {
        self.sign.factor()
    }

    /// Per-component divergence h(p, μ) ≥ 0 with h(μ, μ) = 0, convex in p.
    /// For KL this is p·ln(p/μ) - p + μ, whose sum over a simplex vector is
    /// KL(π‖μ).
    pub fn h(&self, p: f64, mu: f64) -> f64 {
        match self.kind {
            DivergenceKind::SquaredL2 => (p - mu) * (p - mu),
            DivergenceKind::Kl => {
                let plogp = if p > 0.0 { p * (p / mu).ln() } else { 0.0 };
                plogp - p + mu
            }
        }
    }

    /// The prior as seen by the divergence: mixed with uniform for KL,
    /// unchanged for squared L2.
    pub fn effective_prior(&self, mu: &[f64]) -> Vec<f64> {
        match self.kind {
            DivergenceKind::SquaredL2 => mu.to_vec(),
            DivergenceKind::Kl => {
                let uniform = 1.0 / mu.len() as f64;
                mu.iter().map(|&m| (1.0 - self.smoothing) * m + self.smoothing * uniform).collect()
            }
        }
    }

    /// g(a) given the already-smoothed prior component.
    fn g_effective(&self, p: f64, mu_eff: f64, index: usize) -> Result<f64> {
        let raw = match self.kind {
            DivergenceKind::SquaredL2 => (p - mu_eff) * (p - mu_eff),
            DivergenceKind::Kl => {
                if mu_eff <= 0.0 {
                    return Err(Error::ZeroPriorMass(index));
                }
                (p / mu_eff).ln()
            }
        };
        Ok(self.sign_factor() * raw)
    }

    /// Σ_a π(a)·g(a), the divergence part of the value-penalty function.
    /// Components with π(a) = 0 contribute nothing.
    pub fn row_penalty(&self, pi: &[f64], mu: &[f64]) -> Result<f64> {
        check_lengths(pi, mu)?;
        let mu_eff = self.effective_prior(mu);
        let mut total = 0.0;
        for (a, (&p, &m)) in pi.iter().zip(&mu_eff).enumerate() {
            if p > 0.0 {
                total += p * self.g_effective(p, m, a)?;
            }
        }
        Ok(total)
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!("rows of length {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// g(a): -(π(a) - μ(a))² for squared L2 and -ln(π(a)/μ_ε(a)) for KL, with
/// the sign flipped under `PenaltySign::Literal`.
pub fn penalty_g(pi: &[f64], mu: &[f64], spec: &DivergenceSpec, action: usize) -> Result<f64> {
    check_lengths(pi, mu)?;
    if action >= pi.len() {
        return Err(Error::UnknownAction { index: action, count: pi.len() });
    }
    let mu_eff = spec.effective_prior(mu);
    spec.g_effective(pi[action], mu_eff[action], action)
}

/// F = Σ_a π(a)·[g(a)/β + Q(a)].
pub fn value_penalty_f(q: &[f64], pi: &[f64], mu: &[f64], beta: f64, spec: &DivergenceSpec) -> Result<f64> {
    check_lengths(q, pi)?;
    let expected: f64 = pi.iter().zip(q).map(|(p, q)| p * q).sum();
    Ok(expected + spec.row_penalty(pi, mu)? / beta)
}
