use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_trained, DeepGreedy, TabularGreedy};
use super::generate::{generate_with, GeneratorSpec};
use super::manifest::manifest_digest;
use super::record::{RunRecord, StepAudit};
use crate::ddpg::{kappa_candidates, kappa_search, train_agent, AgentSettings, DeepConfig, DeepMethod, NetworkShape};
use crate::env::{worked_example, ProblemInstance, DEFAULT_ACTION_CAP, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::exact::{stationary_values_with_cap, StationarySolution, DEFAULT_TOLERANCE};
use crate::schedule::{BetaSchedule, ExplorationSchedule, StepSize};
use crate::tabular::{make_prior_policy, train_tabular, DivergenceSpec, LearningConfig, TabularMethod, TabularModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceSource {
    WorkedExample,
    File { path: PathBuf },
    Generated(GeneratorSpec),
}

impl InstanceSource {
    pub fn label(&self) -> String {
        match self {
            Self::WorkedExample => "worked_example".into(),
            Self::File { path } => path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned()),
            Self::Generated(g) => format!("gen_m{}_s{}", g.m, g.seed),
        }
    }

    pub fn load(&self) -> Result<ProblemInstance> {
        match self {
            Self::WorkedExample => Ok(worked_example()),
            Self::File { path } => ProblemInstance::load(path),
            Self::Generated(g) => generate_with(g),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Exact,
    Ql,
    Dkql {
        beta: BetaSchedule,
        #[serde(default)]
        divergence: DivergenceSpec,
    },
    Ddpg,
    Dkddpg {
        beta: BetaSchedule,
    },
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Ql => "ql",
            Self::Dkql { .. } => "dkql",
            Self::Ddpg => "ddpg",
            Self::Dkddpg { .. } => "dkddpg",
        }
    }

    /// The unregularized counterpart a domain-knowledge method is compared to.
    pub fn base_label(&self) -> Option<&'static str> {
        match self {
            Self::Dkql { .. } => Some("ql"),
            Self::Dkddpg { .. } => Some("ddpg"),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabularSettings {
    pub step_size: StepSize,
    pub state_cap: usize,
    pub action_cap: usize,
    /// uniform mixture weight applied to the single-period prior
    pub prior_smoothing: f64,
}

impl Default for TabularSettings {
    fn default() -> Self {
        Self { step_size: StepSize::default(), state_cap: DEFAULT_STATE_CAP, action_cap: DEFAULT_ACTION_CAP, prior_smoothing: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepSettings {
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub agent: AgentSettings,
    pub network: NetworkShape,
    pub divergence: DivergenceSpec,
    pub metric_sample_cap: usize,
}

impl Default for DeepSettings {
    fn default() -> Self {
        let d = DeepConfig::default();
        Self {
            batch_size: d.batch_size,
            replay_capacity: d.replay_capacity,
            agent: d.agent,
            network: d.network,
            divergence: d.divergence,
            metric_sample_cap: d.metric_sample_cap,
        }
    }
}

/// Replace the κ of `dkddpg` cells by a probe search over ten log-uniform
/// candidates in [10^lo, 10^hi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KappaSearchSpec {
    pub lo: f64,
    pub hi: f64,
    pub probe_episodes: usize,
    pub seed: u64,
}

impl Default for KappaSearchSpec {
    fn default() -> Self {
        Self { lo: -4.0, hi: 0.0, probe_episodes: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSource>,
    pub methods: Vec<MethodSpec>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub convergence_threshold: f64,
    pub evaluation_horizon: usize,
    pub wall_clock_cap_secs: Option<f64>,
    /// when false every time column is 0 so reports are byte-reproducible
    pub record_wall_clock: bool,
    pub exploration: ExplorationSchedule,
    pub tabular: TabularSettings,
    pub deep: DeepSettings,
    pub kappa_search: Option<KappaSearchSpec>,
    pub oracle_tolerance: f64,
    /// skip the exact oracle for state spaces larger than this
    pub oracle_state_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instances: vec![InstanceSource::Generated(GeneratorSpec::default())],
            methods: vec![MethodSpec::Exact, MethodSpec::Ql],
            seeds: vec![0],
            episodes: 3000,
            steps_per_episode: 500,
            convergence_threshold: super::SMALL_THRESHOLD,
            evaluation_horizon: 500,
            wall_clock_cap_secs: None,
            record_wall_clock: true,
            exploration: ExplorationSchedule::default(),
            tabular: TabularSettings::default(),
            deep: DeepSettings::default(),
            kappa_search: None,
            oracle_tolerance: DEFAULT_TOLERANCE,
            oracle_state_cap: 100_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.instances.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return bad("instances, methods and seeds must all be non-empty");
        }
        if self.episodes == 0 || self.steps_per_episode == 0 || self.evaluation_horizon == 0 {
            return bad("episode, step and evaluation caps must be at least 1");
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold < 1.0) {
            return bad("convergence threshold must lie in (0, 1)");
        }
        if self.wall_clock_cap_secs.is_some_and(|c| !(c > 0.0)) {
            return bad("wall-clock cap must be positive");
        }
        self.learning_config().validate()?;
        self.deep_config().validate()
    }

    /// Reads TOML or JSON by extension; relative instance paths resolve
    /// against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut config: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for source in &mut config.instances {
            if let InstanceSource::File { path } = source {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn learning_config(&self) -> LearningConfig {
        LearningConfig {
            episodes: self.episodes,
            steps_per_episode: self.steps_per_episode,
            exploration: self.exploration,
            step_size: self.tabular.step_size,
            convergence_threshold: Some(self.convergence_threshold),
            wall_clock_cap_secs: self.wall_clock_cap_secs,
            record_wall_clock: self.record_wall_clock,
        }
    }

    pub fn deep_config(&self) -> DeepConfig {
        DeepConfig {
            episodes: self.episodes,
            steps_per_episode: self.steps_per_episode,
            batch_size: self.deep.batch_size,
            replay_capacity: self.deep.replay_capacity,
            agent: self.deep.agent,
            network: self.deep.network.clone(),
            exploration: self.exploration,
            divergence: self.deep.divergence,
            convergence_threshold: Some(self.convergence_threshold),
            metric_sample_cap: self.deep.metric_sample_cap,
            wall_clock_cap_secs: self.wall_clock_cap_secs,
            record_wall_clock: self.record_wall_clock,
        }
    }

    pub fn manifest(&self) -> Result<String> {
        manifest_digest(self)
    }
}

/// One (method, instance, seed) outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: String,
    pub instance: String,
    pub seed: u64,
    pub converged: bool,
    pub episodes: usize,
    pub convergence_time_s: f64,
    pub average_q: f64,
    pub oracle_average_q: Option<f64>,
    pub percent_difference: Option<f64>,
    pub evaluation_reward: f64,
    pub timed_out: bool,
}

/// DK method against its base on the same instance and seed; each change
/// is (DK - base)/base·100, empty when base is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub instance: String,
    pub seed: u64,
    pub method: String,
    pub base: String,
    pub episodes_change_pct: Option<f64>,
    pub time_change_pct: Option<f64>,
    pub average_q_change_pct: Option<f64>,
    pub evaluation_reward_change_pct: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub manifest: String,
    pub cells: Vec<CellResult>,
    pub pairs: Vec<PairComparison>,
    pub records: Vec<RunRecord>,
    pub audit: StepAudit,
    pub timed_out: bool,
}

pub fn percent_change(value: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| (value - base) / base * 100.0)
}

struct Prepared {
    label: String,
    instance: ProblemInstance,
    oracle: Option<StationarySolution>,
}

fn prepare(source: &InstanceSource, config: &ExperimentConfig) -> Result<Prepared> {
    let instance = source.load()?;
    let oracle = match stationary_values_with_cap(&instance, config.oracle_tolerance, config.oracle_state_cap) {
        Ok(sol) => Some(sol),
        Err(Error::StateSpaceLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Prepared { label: source.label(), instance, oracle })
}

fn oracle_mean(sol: &StationarySolution) -> f64 {
    sol.values.iter().sum::<f64>() / sol.values.len() as f64
}

fn run_cell(prep: &Prepared, method: &MethodSpec, seed: u64, config: &ExperimentConfig) -> Result<(CellResult, Option<RunRecord>)> {
    let inst = &prep.instance;
    let horizon = config.evaluation_horizon;
    let oracle_avg = prep.oracle.as_ref().map(oracle_mean);
    let (average_q, evaluation_reward, record) = match method {
        MethodSpec::Exact => {
            let sol = prep.oracle.as_ref().ok_or_else(|| {
                Error::Config(format!("instance {} is too large for the exact oracle", prep.label))
            })?;
            (oracle_mean(sol), evaluate_trained(sol, inst, horizon, seed)?, None)
        }
        MethodSpec::Ql | MethodSpec::Dkql { .. } => {
            let model = TabularModel::new(inst, config.tabular.state_cap, config.tabular.action_cap)?;
            let (tm, prior) = match *method {
                MethodSpec::Dkql { beta, divergence } => (
                    TabularMethod::DomainKnowledge { beta, divergence },
                    Some(make_prior_policy(&model, config.tabular.prior_smoothing)?),
                ),
                _ => (TabularMethod::QLearning, None),
            };
            let (q, rec) = train_tabular(&model, &config.learning_config(), &tm, prior.as_ref(), seed, |_, _| {})?;
            let eval = evaluate_trained(&TabularGreedy { model: &model, table: &q }, inst, horizon, seed)?;
            (q.average_max(), eval, Some(rec))
        }
        MethodSpec::Ddpg | MethodSpec::Dkddpg { .. } => {
            let dm = match *method {
                MethodSpec::Dkddpg { beta } => DeepMethod::DomainKnowledge { beta },
                _ => DeepMethod::Ddpg,
            };
            let (agent, rec) = train_agent(inst, &config.deep_config(), &dm, seed)?;
            let eval = evaluate_trained(&DeepGreedy { agent: &agent, n_d: inst.n_d() }, inst, horizon, seed)?;
            let avg = rec.final_avg_q().unwrap_or(0.0);
            (avg, eval, Some(rec))
        }
    };
    let (converged, episodes, time_ms, timed_out) = match &record {
        Some(r) => (
            r.summary.converged,
            r.summary.episodes_to_convergence.unwrap_or(r.rows.len()),
            r.summary.time_to_convergence_ms.or(r.rows.last().map(|row| row.wall_ms)).unwrap_or(0),
            r.summary.timed_out,
        ),
        None => (true, 0, 0, false),
    };
    let cell = CellResult {
        method: method.label().into(),
        instance: prep.label.clone(),
        seed,
        converged,
        episodes,
        convergence_time_s: time_ms as f64 / 1000.0,
        average_q,
        oracle_average_q: oracle_avg,
        percent_difference: oracle_avg.and_then(|o| percent_change(average_q, o)),
        evaluation_reward,
        timed_out,
    };
    Ok((cell, record))
}

/// Resolves κ searches so every cell runs with a concrete schedule.
fn resolve_methods(prep: &Prepared, config: &ExperimentConfig) -> Result<Vec<MethodSpec>> {
    config
        .methods
        .iter()
        .map(|m| match (m, config.kappa_search) {
            (MethodSpec::Dkddpg { beta: BetaSchedule::Linear { .. } }, Some(spec)) => {
                let cands = kappa_candidates(spec.seed, spec.lo, spec.hi);
                let pick = kappa_search(&prep.instance, &config.deep_config(), &cands, spec.probe_episodes, spec.seed)?;
                Ok(MethodSpec::Dkddpg { beta: BetaSchedule::Linear { kappa: pick.kappa } })
            }
            _ => Ok(*m),
        })
        .collect()
}

/// Runs every (instance, method, seed) cell in parallel; results are
/// sorted by (instance, method, seed) so output order never depends on
/// scheduling.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let manifest = config.manifest()?;
    let prepared = config.instances.iter().map(|s| prepare(s, config)).collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for prep in &prepared {
        for method in resolve_methods(prep, config)? {
            for &seed in &config.seeds {
                jobs.push((prep, method, seed));
            }
        }
    }
    let mut outcomes = jobs
        .par_iter()
        .map(|(prep, method, seed)| run_cell(prep, method, *seed, config))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| (&a.0.instance, &a.0.method, a.0.seed).cmp(&(&b.0.instance, &b.0.method, b.0.seed)));

    let mut audit = StepAudit::default();
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for (cell, rec) in outcomes {
        if let Some(r) = rec {
            audit.merge(&r.audit);
            records.push(r);
        }
        cells.push(cell);
    }
    let pairs = pair_up(&cells, &config.methods);
    let timed_out = cells.iter().any(|c| c.timed_out);
    Ok(ComparisonReport { manifest, cells, pairs, records, audit, timed_out })
}

fn pair_up(cells: &[CellResult], methods: &[MethodSpec]) -> Vec<PairComparison> {
    let index: HashMap<(&str, &str, u64), &CellResult> =
        cells.iter().map(|c| ((c.instance.as_str(), c.method.as_str(), c.seed), c)).collect();
    let mut pairs = Vec::new();
    for cell in cells {
        let Some(base_label) = methods.iter().find(|m| m.label() == cell.method).and_then(|m| m.base_label()) else {
            continue;
        };
        let Some(base) = index.get(&(cell.instance.as_str(), base_label, cell.seed)) else {
            continue;
        };
        pairs.push(PairComparison {
            instance: cell.instance.clone(),
            seed: cell.seed,
            method: cell.method.clone(),
            base: base.method.clone(),
            episodes_change_pct: percent_change(cell.episodes as f64, base.episodes as f64),
            time_change_pct: percent_change(cell.convergence_time_s, base.convergence_time_s),
            average_q_change_pct: percent_change(cell.average_q, base.average_q),
            evaluation_reward_change_pct: percent_change(cell.evaluation_reward, base.evaluation_reward),
        });
    }
    pairs
}

fn write_table<T: Serialize>(path: &Path, manifest: &str, rows: &[T], header: &[&str]) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# manifest_sha256={manifest}\n").as_bytes());
    {
        let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(&mut out);
        if rows.is_empty() {
            w.write_record(header)?;
        }
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const PAIRS_FILE: &str = "dk_vs_base.csv";
pub const SERIES_DIR: &str = "series";

impl ComparisonReport {
    /// comparison.csv, dk_vs_base.csv and one series CSV per trained cell.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join(SERIES_DIR))?;
        let cells_path = dir.join(COMPARISON_FILE);
        write_table(&cells_path, &self.manifest, &self.cells, &CELL_HEADER)?;
        let pairs_path = dir.join(PAIRS_FILE);
        write_table(&pairs_path, &self.manifest, &self.pairs, &PAIR_HEADER)?;
        let mut written = vec![cells_path, pairs_path];
        let instances = self.cells.iter().filter(|c| c.method != "exact").map(|c| c.instance.clone());
        for (rec, instance) in self.records.iter().zip(instances) {
            let path = dir.join(SERIES_DIR).join(format!("{instance}_{}_{}.csv", rec.method, rec.seed));
            let mut buf = Vec::new();
            rec.write_csv(&mut buf, &self.manifest)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        Ok(written)
    }
}

const CELL_HEADER: [&str; 11] = [
    "method",
    "instance",
    "seed",
    "converged",
    "episodes",
    "convergence_time_s",
    "average_q",
    "oracle_average_q",
    "percent_difference",
    "evaluation_reward",
    "timed_out",
];

const PAIR_HEADER: [&str; 8] = [
    "instance",
    "seed",
    "method",
    "base",
    "episodes_change_pct",
    "time_change_pct",
    "average_q_change_pct",
    "evaluation_reward_change_pct",
];

/// Parses a table written by [`ComparisonReport::write`], returning the
/// manifest and rows.
pub fn read_comparison(path: impl AsRef<Path>) -> Result<(String, Vec<CellResult>)> {
    let text = fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Config("empty report".into()))?;
    let manifest = first
        .strip_prefix("# manifest_sha256=")
        .ok_or_else(|| Error::Config("report lacks a manifest line".into()))?
        .to_string();
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let rows = reader.deserialize().collect::<std::result::Result<Vec<CellResult>, _>>()?;
    Ok((manifest, rows))
}
