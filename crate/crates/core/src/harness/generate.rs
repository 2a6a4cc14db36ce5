use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{build_horizontal_reward, ProblemInstance};
use crate::error::{Error, Result};
use crate::rng;

/// Random square instance: demand limits U_i and capacities c_j uniform on
/// {0..=max_level}, pmf_i uniform on {0..=U_i}, horizontal rewards
/// prize - δ_ij with δ_ij uniform on [0, max_distance].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub m: usize,
    pub seed: u64,
    pub max_level: u32,
    pub prize: f64,
    pub max_distance: f64,
    pub gamma: f64,
    /// None uses the instance default
    pub truncation: Option<u32>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { m: 2, seed: 0, max_level: 20, prize: 10.0, max_distance: 8.0, gamma: 0.9, truncation: None }
    }
}

impl GeneratorSpec {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, seed, ..Self::default() }
    }
}

pub fn generate_instance(m: usize, seed: u64) -> Result<ProblemInstance> {
    generate_with(&GeneratorSpec::new(m, seed))
}

pub fn generate_with(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    if spec.m == 0 {
        return Err(Error::Config("instance generation needs m >= 1".into()));
    }
    if !(spec.max_distance >= 0.0 && spec.prize.is_finite()) {
        return Err(Error::Config("distance range and prize must be finite and nonnegative".into()));
    }
    let mut r = rng::stream(spec.seed);
    let m = spec.m;
    let pmfs: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let upper = r.gen_range(0..=spec.max_level) as usize;
            vec![1.0 / (upper + 1) as f64; upper + 1]
        })
        .collect();
    let capacities: Vec<u32> = (0..m).map(|_| r.gen_range(0..=spec.max_level)).collect();
    let delta: Vec<Vec<f64>> =
        (0..m).map(|_| (0..m).map(|_| r.gen_range(0.0..=spec.max_distance)).collect()).collect();
    let reward = build_horizontal_reward(spec.prize, &delta)?;
    let builder = ProblemInstance::builder(capacities, pmfs, reward, spec.gamma).seed(spec.seed);
    match spec.truncation {
        Some(n_d) => builder.truncation(n_d),
        None => builder,
    }
    .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_shapes() {
        for seed in 0..30 {
            let inst = generate_instance(3, seed).unwrap();
            assert_eq!((inst.m(), inst.n()), (3, 3));
            assert!(inst.capacities().iter().all(|&c| c <= 20));
            for pmf in inst.demand_pmfs() {
                assert!(pmf.len() <= 21);
                assert!(pmf.iter().all(|&p| (p - pmf[0]).abs() < 1e-15));
            }
            assert!(inst.reward().as_slice().iter().all(|&v| (2.0..=10.0).contains(&v)));
            assert_eq!(inst.gamma(), 0.9);
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(generate_instance(4, 7).unwrap(), generate_instance(4, 7).unwrap());
        assert_ne!(generate_instance(4, 7).unwrap(), generate_instance(4, 8).unwrap());
        assert!(generate_instance(0, 1).is_err());
    }
}
