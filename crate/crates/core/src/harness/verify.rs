use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{ProblemInstance, RewardMatrix, DEFAULT_ACTION_CAP, DEFAULT_STATE_CAP};
use crate::error::Result;
use crate::exact::{stationary_value_iteration, QTableExact, DEFAULT_TOLERANCE};
use crate::schedule::{BetaSchedule, ExplorationSchedule};
use crate::tabular::{make_prior_policy, train_tabular, DivergenceSpec, LearningConfig, QTable, TabularMethod, TabularModel};

/// Two demand types, two supply types, demands and capacities at most 2.
pub fn verification_instance() -> ProblemInstance {
    let r = RewardMatrix::from_rows(&[vec![10.0, 7.0], vec![5.0, 8.0]]).expect("static shape");
    ProblemInstance::builder(vec![1, 2], vec![vec![0.5, 0.3, 0.2], vec![0.6, 0.4]], r, 0.8)
        .truncation(2)
        .build()
        .expect("static instance is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySettings {
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub epsilon: f64,
    pub fixed_beta: f64,
    pub kappa: f64,
    pub divergence: DivergenceSpec,
    /// pass bar on ‖Q - Q*‖∞ / ‖Q*‖∞
    pub tolerance: f64,
    /// fraction of training at which the early distance is taken
    pub early_fraction: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            episodes: 3000,
            steps_per_episode: 50,
            epsilon: 1.0,
            fixed_beta: 10.0,
            kappa: 1e-3,
            divergence: DivergenceSpec::squared_l2(),
            tolerance: 0.05,
            early_fraction: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    FixedBeta,
    LinearBeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremRun {
    pub regime: Regime,
    pub seed: u64,
    pub early_distance: f64,
    pub final_distance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub runs: Vec<TheoremRun>,
}

impl VerifyReport {
    pub fn passes(&self, regime: Regime) -> usize {
        self.runs.iter().filter(|r| r.regime == regime && r.passed).count()
    }

    pub fn count(&self, regime: Regime) -> usize {
        self.runs.iter().filter(|r| r.regime == regime).count()
    }
}

/// ‖Q - Q*‖∞ / ‖Q*‖∞ over every feasible pair.
pub fn relative_distance(q: &QTable, exact: &QTableExact) -> f64 {
    let (mut gap, mut scale) = (0.0f64, 0.0f64);
    for s in 0..q.state_count() {
        for (a, &v) in exact.q_values(s).iter().enumerate() {
            scale = scale.max(v.abs());
            gap = gap.max((q.row(s)[a] - v).abs());
        }
    }
    if scale == 0.0 {
        gap
    } else {
        gap / scale
    }
}

/// Regularized Q-learning under a fixed β and under β_t = κt, measured
/// against the exact optimal Q on `instance`. A fixed-β run passes when its
/// final distance is under the tolerance; a growing-β run must also not
/// end farther away than at the early checkpoint.
pub fn run_theorem_suite(instance: &ProblemInstance, settings: &VerifySettings) -> Result<VerifyReport> {
    let exact = stationary_value_iteration(instance, DEFAULT_TOLERANCE)?;
    let model = TabularModel::new(instance, DEFAULT_STATE_CAP, DEFAULT_ACTION_CAP)?;
    let prior = make_prior_policy(&model, 0.0)?;
    let config = LearningConfig {
        episodes: settings.episodes,
        steps_per_episode: settings.steps_per_episode,
        exploration: ExplorationSchedule::constant(settings.epsilon),
        convergence_threshold: None,
        record_wall_clock: false,
        ..LearningConfig::default()
    };
    let early_episode = ((settings.episodes as f64 * settings.early_fraction).round() as usize).max(1) - 1;
    let jobs: Vec<(Regime, u64)> =
        [Regime::FixedBeta, Regime::LinearBeta].iter().flat_map(|&r| settings.seeds.iter().map(move |&s| (r, s))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(regime, seed)| {
            let beta = match regime {
                Regime::FixedBeta => BetaSchedule::Fixed { beta: settings.fixed_beta },
                Regime::LinearBeta => BetaSchedule::Linear { kappa: settings.kappa },
            };
            let method = TabularMethod::DomainKnowledge { beta, divergence: settings.divergence };
            let mut early = f64::NAN;
            let (q, _) = train_tabular(&model, &config, &method, Some(&prior), seed, |e, q| {
                if e == early_episode {
                    early = relative_distance(q, &exact);
                }
            })?;
            let final_distance = relative_distance(&q, &exact);
            let passed = final_distance < settings.tolerance
                && (regime == Regime::FixedBeta || final_distance <= early);
            Ok(TheoremRun { regime, seed, early_distance: early, final_distance, passed })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_bounds() {
        let inst = verification_instance();
        assert_eq!((inst.m(), inst.n()), (2, 2));
        assert!(inst.capacities().iter().all(|&c| c <= 2));
        assert!(inst.demand_pmfs().iter().all(|p| p.len() <= 3));
    }

    #[test]
    fn exact_table_has_zero_distance() {
        let inst = verification_instance();
        let exact = stationary_value_iteration(&inst, 1e-8).unwrap();
        let model = TabularModel::new(&inst, DEFAULT_STATE_CAP, DEFAULT_ACTION_CAP).unwrap();
        let mut q = QTable::zeros(&model);
        assert!((relative_distance(&q, &exact) - 1.0).abs() < 1e-12);
        for s in 0..model.state_count() {
            for (a, &v) in exact.q_values(s).iter().enumerate() {
                q.set(s, a, v).unwrap();
            }
        }
        assert_eq!(relative_distance(&q, &exact), 0.0);
    }

    #[test]
    fn short_suite_reports_every_run() {
        let settings = VerifySettings { seeds: vec![0, 1], episodes: 20, ..VerifySettings::default() };
        let report = run_theorem_suite(&verification_instance(), &settings).unwrap();
        assert_eq!(report.count(Regime::FixedBeta), 2);
        assert_eq!(report.count(Regime::LinearBeta), 2);
        assert!(report.runs.iter().all(|r| r.early_distance.is_finite() && r.final_distance.is_finite()));
    }
}
