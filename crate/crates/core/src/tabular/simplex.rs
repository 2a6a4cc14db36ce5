use crate::error::{Error, Result};

use super::divergence::{value_penalty_f, DivergenceKind, DivergenceSpec, PenaltySign};

pub const MAX_ITERATIONS: usize = 10_000;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOptimum {
    pub policy: Vec<f64>,
    pub value: f64,
}

/// Euclidean projection onto the probability simplex. The input is shifted
/// by its maximum first so very large entries keep an exact vertex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = v.iter().map(|&x| x - top).collect();
    let mut sorted = shifted.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    shifted.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

fn vertex(len: usize, at: usize) -> Vec<f64> {
    let mut p = vec![0.0; len];
    p[at] = 1.0;
    p
}

/// argmax over the simplex of Σ_a π(a)·[g(a)/β + Q(a)] and its value.
pub fn max_policy_f(q: &[f64], mu: &[f64], beta: f64, spec: &DivergenceSpec) -> Result<PolicyOptimum> {
    if q.len() != mu.len() || q.is_empty() {
        return Err(Error::Shape(format!("Q row of length {} and prior of length {}", q.len(), mu.len())));
    }
    if !(beta > 0.0) {
        return Err(Error::Config(format!("β must be positive, got {beta}")));
    }
    match (spec.kind, spec.sign) {
        (DivergenceKind::Kl, PenaltySign::Penalize) => softmax_optimum(q, &spec.effective_prior(mu), beta),
        (DivergenceKind::Kl, PenaltySign::Literal) => best_vertex(q, mu, beta, spec),
        (DivergenceKind::SquaredL2, _) => projected_ascent(q, mu, beta, spec),
    }
}

/// π ∝ μ_ε·exp(βQ) and F* = max Q + ln Σ μ_ε·exp(β(Q - max Q)) / β.
fn softmax_optimum(q: &[f64], mu: &[f64], beta: f64) -> Result<PolicyOptimum> {
    let mass: f64 = mu.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroPriorMass(0));
    }
    let top = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = q.iter().map(|&v| beta * (v - top)).collect();
    let excess: f64 = mu.iter().zip(&shifted).map(|(m, s)| m * s.exp_m1()).sum();
    let log_z = mass.ln() + (excess / mass).ln_1p();
    let weights: Vec<f64> = mu.iter().zip(&shifted).map(|(m, s)| m * s.exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(PolicyOptimum { policy: weights.iter().map(|w| w / z).collect(), value: top + log_z / beta })
}

/// F is convex when the divergence is added, so a vertex is optimal.
fn best_vertex(q: &[f64], mu: &[f64], beta: f64, spec: &DivergenceSpec) -> Result<PolicyOptimum> {
    let mut best: Option<PolicyOptimum> = None;
    for a in 0..q.len() {
        let policy = vertex(q.len(), a);
        let value = value_penalty_f(q, &policy, mu, beta, spec)?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(PolicyOptimum { policy, value });
        }
    }
    Ok(best.expect("nonempty row"))
}

/// Projected gradient ascent from several starts, each result polished by
/// solving the optimality conditions on its support. Nested supports by
/// descending Q and every vertex are scored as well, since F need not be
/// concave. F is separable, with
/// ∂F/∂π(a) = Q(a) + s·(π(a) - μ(a))(3π(a) - μ(a))/β
/// and curvature bounded by max(|6 - 4μ(a)|, 4μ(a))/β.
fn projected_ascent(q: &[f64], mu: &[f64], beta: f64, spec: &DivergenceSpec) -> Result<PolicyOptimum> {
    let s = spec.sign_factor();
    let lipschitz = mu.iter().map(|&m| (6.0 - 4.0 * m).abs().max(4.0 * m)).fold(0.0, f64::max) / beta;
    let step = 1.0 / lipschitz;
    let n = q.len();
    let starts = [project_to_simplex(mu), vertex(n, argmax(q)), vec![1.0 / n as f64; n]];

    let mut best: Option<PolicyOptimum> = None;
    let mut consider = |policy: Vec<f64>| -> Result<()> {
        let value = value_penalty_f(q, &policy, mu, beta, spec)?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(PolicyOptimum { policy, value });
        }
        Ok(())
    };

    let mut converged_any = false;
    let mut smallest_residual = f64::INFINITY;
    for start in starts {
        let mut pi = start;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let moved: Vec<f64> = pi
                .iter()
                .zip(q)
                .zip(mu)
                .map(|((&p, &qa), &m)| p + step * (qa + s * (p - m) * (3.0 * p - m) / beta))
                .collect();
            let next = project_to_simplex(&moved);
            residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if residual < RESIDUAL_TOLERANCE {
                break;
            }
        }
        smallest_residual = smallest_residual.min(residual);
        converged_any |= residual < RESIDUAL_TOLERANCE;
        if s < 0.0 {
            let support: Vec<usize> = (0..n).filter(|&a| pi[a] > 0.0).collect();
            consider(stationary_on_support(q, mu, beta, &support))?;
        }
        consider(pi)?;
    }
    if !converged_any {
        return Err(Error::NoConvergence { residual: smallest_residual });
    }
    if s < 0.0 {
        // Supports made of the k best actions by Q, k = 1..n.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
        for k in 2..=n {
            consider(stationary_on_support(q, mu, beta, &order[..k]))?;
        }
    }
    for a in 0..n {
        consider(vertex(n, a))?;
    }
    Ok(best.expect("at least one candidate"))
}

/// Penalized squared-L2 stationary point restricted to `support`: every
/// supported π(a) sits on the concave branch where ∂F/∂π(a) = λ, i.e.
/// π(a) = (2μ(a) + sqrt(μ(a)² + 3β(Q(a) - λ)))/3, and λ is set by bisection
/// so the masses sum to one.
fn stationary_on_support(q: &[f64], mu: &[f64], beta: f64, support: &[usize]) -> Vec<f64> {
    let response = |a: usize, lambda: f64| {
        let disc = mu[a] * mu[a] + 3.0 * beta * (q[a] - lambda);
        if disc < 0.0 {
            0.0
        } else {
            ((2.0 * mu[a] + disc.sqrt()) / 3.0).min(1.0)
        }
    };
    let total = |lambda: f64| support.iter().map(|&a| response(a, lambda)).sum::<f64>();
    let mut hi = support.iter().map(|&a| q[a] + mu[a] * mu[a] / (3.0 * beta)).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut lo = support.iter().map(|&a| q[a] - 3.0 / beta).fold(f64::INFINITY, f64::min) - 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if total(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut pi = vec![0.0; q.len()];
    for &a in support {
        pi[a] = response(a, lo);
    }
    let sum: f64 = pi.iter().sum();
    project_to_simplex(&pi.iter().map(|p| p / sum).collect::<Vec<_>>())
}
