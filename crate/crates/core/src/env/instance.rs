use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::RewardMatrix;
use crate::error::{Error, Result};

/// Tolerance on pmf normalization when reading an instance file.
pub const FILE_PMF_TOLERANCE: f64 = 1e-6;

/// Immutable description of a matching problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    m: usize,
    n: usize,
    horizon: usize,
    gamma: f64,
    capacities: Vec<u32>,
    demand_pmfs: Vec<Vec<f64>>,
    reward: RewardMatrix,
    k1: f64,
    k2: f64,
    n_d: u32,
    seed: u64,
}

/// On-disk layout of an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "horizon_T")]
    pub horizon_t: usize,
    pub gamma: f64,
    pub capacities: Vec<u32>,
    pub demand_pmfs: Vec<Vec<f64>>,
    /// m*n unit rewards, row-major.
    pub reward: Vec<f64>,
    pub k1: f64,
    pub k2: f64,
    #[serde(rename = "N_d")]
    pub n_d: u32,
    #[serde(default)]
    pub seed: u64,
}

/// Builder carrying the optional pieces of an instance. Unset penalty
/// constants default to 2 * max r_ij and an unset truncation limit to
/// 2 * (largest pmf support) + (largest capacity).
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    capacities: Vec<u32>,
    demand_pmfs: Vec<Vec<f64>>,
    reward: RewardMatrix,
    gamma: f64,
    horizon: usize,
    k1: Option<f64>,
    k2: Option<f64>,
    n_d: Option<u32>,
    seed: u64,
}

impl InstanceBuilder {
    pub fn horizon(mut self, periods: usize) -> Self {
        self.horizon = periods;
        self
    }

    pub fn penalties(mut self, k1: f64, k2: f64) -> Self {
        self.k1 = Some(k1);
        self.k2 = Some(k2);
        self
    }

    pub fn truncation(mut self, n_d: u32) -> Self {
        self.n_d = Some(n_d);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn build(self) -> Result<ProblemInstance> {
        let default_k = (2.0 * self.reward.max_entry()).max(0.0);
        let n_d = match self.n_d {
            Some(v) => v,
            None => default_truncation(&self.demand_pmfs, &self.capacities),
        };
        let instance = ProblemInstance {
            m: self.reward.rows(),
            n: self.reward.cols(),
            horizon: self.horizon,
            gamma: self.gamma,
            capacities: self.capacities,
            demand_pmfs: self.demand_pmfs,
            reward: self.reward,
            k1: self.k1.unwrap_or(default_k),
            k2: self.k2.unwrap_or(default_k),
            n_d,
            seed: self.seed,
        };
        instance.validate(1e-9)?;
        Ok(instance)
    }
}

fn max_support(pmf: &[f64]) -> u32 {
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

pub fn default_truncation(pmfs: &[Vec<f64>], capacities: &[u32]) -> u32 {
    let support = pmfs.iter().map(|p| max_support(p)).max().unwrap_or(0);
    let cap = capacities.iter().copied().max().unwrap_or(0);
    2 * support + cap
}

impl ProblemInstance {
    pub fn builder(
        capacities: Vec<u32>,
        demand_pmfs: Vec<Vec<f64>>,
        reward: RewardMatrix,
        gamma: f64,
    ) -> InstanceBuilder {
        InstanceBuilder {
            capacities,
            demand_pmfs,
            reward,
            gamma,
            horizon: 0,
            k1: None,
            k2: None,
            n_d: None,
            seed: 0,
        }
    }

    fn validate(&self, pmf_tol: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.m == 0 || self.n == 0 {
            return bad("need at least one demand type and one supply type".into());
        }
        if self.capacities.len() != self.n {
            return bad(format!("{} capacities for {} supply types", self.capacities.len(), self.n));
        }
        if self.demand_pmfs.len() != self.m {
            return bad(format!("{} pmfs for {} demand types", self.demand_pmfs.len(), self.m));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0,1)", self.gamma));
        }
        if !(self.k1 >= 0.0 && self.k2 >= 0.0) {
            return bad("penalty constants must be nonnegative".into());
        }
        for (i, pmf) in self.demand_pmfs.iter().enumerate() {
            if pmf.is_empty() || pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return bad(format!("pmf {i} has invalid entries"));
            }
            let total: f64 = pmf.iter().sum();
            if (total - 1.0).abs() > pmf_tol {
                return bad(format!("pmf {i} sums to {total}"));
            }
        }
        if self.reward.as_slice().iter().any(|r| !r.is_finite()) {
            return bad("reward entries must be finite".into());
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of periods in the finite-horizon regime; 0 means stationary.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn demand_pmfs(&self) -> &[Vec<f64>] {
        &self.demand_pmfs
    }

    pub fn reward(&self) -> &RewardMatrix {
        &self.reward
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Truncation limit on each outstanding-demand component.
    pub fn n_d(&self) -> u32 {
        self.n_d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_horizon(&self, periods: usize) -> Self {
        Self { horizon: periods, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let out = Self { gamma, ..self.clone() };
        out.validate(1e-9)?;
        Ok(out)
    }

    pub fn with_reward(&self, reward: RewardMatrix) -> Result<Self> {
        if reward.rows() != self.m || reward.cols() != self.n {
            return Err(Error::Shape("reward matrix does not match instance".into()));
        }
        Ok(Self { reward, ..self.clone() })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            m: self.m,
            n: self.n,
            horizon_t: self.horizon,
            gamma: self.gamma,
            capacities: self.capacities.clone(),
            demand_pmfs: self.demand_pmfs.clone(),
            reward: self.reward.as_slice().to_vec(),
            k1: self.k1,
            k2: self.k2,
            n_d: self.n_d,
            seed: self.seed,
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let reward = RewardMatrix::from_row_major(file.m, file.n, file.reward)?;
        let instance = Self {
            m: file.m,
            n: file.n,
            horizon: file.horizon_t,
            gamma: file.gamma,
            capacities: file.capacities,
            demand_pmfs: file.demand_pmfs,
            reward,
            k1: file.k1,
            k2: file.k2,
            n_d: file.n_d,
            seed: file.seed,
        };
        instance.validate(FILE_PMF_TOLERANCE)?;
        let demand_pmfs = instance.demand_pmfs.iter().map(|p| renormalize(p)).collect();
        Ok(Self { demand_pmfs, ..instance })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn renormalize(pmf: &[f64]) -> Vec<f64> {
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() <= 1e-12 {
        pmf.to_vec()
    } else {
        pmf.iter().map(|p| p / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ProblemInstance {
        let r = RewardMatrix::from_rows(&[vec![10.0, 7.0], vec![5.0, 8.0]]).unwrap();
        ProblemInstance::builder(
            vec![6, 5],
            vec![
                vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0, 0.0],
                vec![0.2, 0.0, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0, 0.2],
            ],
            r,
            0.9,
        )
        .horizon(3)
        .build()
        .unwrap()
    }

    #[test]
    fn defaults_follow_rewards_and_supports() {
        let inst = worked();
        assert_eq!(inst.k1(), 20.0);
        assert_eq!(inst.k2(), 20.0);
        assert_eq!(inst.n_d(), 2 * 8 + 6);
    }

    #[test]
    fn json_round_trip_preserves_instance() {
        let inst = worked();
        let back = ProblemInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn file_rejects_unnormalized_pmf() {
        let mut file = worked().to_file();
        file.demand_pmfs[0][0] += 2e-6;
        let text = serde_json::to_string(&file).unwrap();
        assert!(matches!(ProblemInstance::from_json(&text), Err(Error::InvalidInstance(_))));

        let mut file = worked().to_file();
        file.demand_pmfs[0][0] += 5e-7;
        let text = serde_json::to_string(&file).unwrap();
        let inst = ProblemInstance::from_json(&text).unwrap();
        let total: f64 = inst.demand_pmfs()[0].iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_field_names() {
        let text = worked().to_json().unwrap();
        for key in ["\"horizon_T\"", "\"N_d\"", "\"demand_pmfs\"", "\"k1\"", "\"seed\""] {
            assert!(text.contains(key), "missing {key}");
        }
    }

    #[test]
    fn rejects_bad_gamma_and_shapes() {
        let r = RewardMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(ProblemInstance::builder(vec![1], vec![vec![1.0]], r.clone(), 1.0).build().is_err());
        assert!(ProblemInstance::builder(vec![1, 2], vec![vec![1.0]], r, 0.5).build().is_err());
    }
}
