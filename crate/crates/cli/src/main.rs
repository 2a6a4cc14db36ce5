use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dkmatch_core::ddpg::{train_agent, AgentCheckpoint, DeepMethod};
use dkmatch_core::exact::{backward_induction, stationary_values, OracleDump, DEFAULT_TOLERANCE};
use dkmatch_core::harness::{
    evaluate_trained, generate_with, run_comparison, run_theorem_suite, verification_instance, DeepGreedy, ExperimentConfig,
    GeneratorSpec, Regime, TabularCheckpoint, TabularGreedy, VerifySettings,
};
use dkmatch_core::schedule::BetaSchedule;
use dkmatch_core::tabular::{make_prior_policy, DivergenceSpec, train_tabular, TabularMethod, TabularModel};
use dkmatch_core::{Error, ProblemInstance};
use serde::Serialize;

const EXIT_VALIDATION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "dkmatch", version, about = "Dynamic demand-capacity matching: exact oracles and learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Ql,
    Dkql,
    Ddpg,
    Dkddpg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Divergence {
    L2,
    Kl,
}

impl Divergence {
    fn spec(self) -> DivergenceSpec {
        match self {
            Self::L2 => DivergenceSpec::squared_l2(),
            Self::Kl => DivergenceSpec::kl(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a random square instance as JSON.
    Generate {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        truncation: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance exactly: backward induction when it has a horizon,
    /// stationary value iteration otherwise.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one learner and write its checkpoint and per-episode record.
    Train {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// experiment config supplying caps and hyperparameters
        #[arg(long)]
        config: Option<PathBuf>,
        /// fixed regularization weight; otherwise β grows as κ·t
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        kappa: f64,
        #[arg(long, value_enum, default_value_t = Divergence::L2)]
        divergence: Divergence,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy rollout of a saved checkpoint; prints the cumulative reward.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        horizon: usize,
    },
    /// Run every configured cell and write the comparison reports.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regularized Q-learning against the exact optimum on a tiny instance.
    Verify {
        #[arg(long, default_value_t = 3000)]
        episodes: usize,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// runs per regime that must pass
        #[arg(long, default_value_t = 4)]
        required: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err.chain().any(|e| {
                e.downcast_ref::<Error>().is_some_and(|e| {
                    matches!(
                        e,
                        Error::Config(_)
                            | Error::Shape(_)
                            | Error::InvalidInstance(_)
                            | Error::Json(_)
                            | Error::Io(_)
                            | Error::StateSpaceLimit { .. }
                            | Error::ActionLimit { .. }
                    )
                })
            });
            ExitCode::from(if validation { EXIT_VALIDATION } else { 1 })
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<ProblemInstance> {
    ProblemInstance::load(path).with_context(|| format!("loading instance {}", path.display()))
}

#[derive(Serialize)]
struct StationaryDump {
    states: Vec<Vec<u32>>,
    values: Vec<f64>,
    actions: Vec<Vec<Vec<u32>>>,
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Generate { m, seed, truncation, out } => {
            let inst = generate_with(&GeneratorSpec { m, seed, truncation, ..GeneratorSpec::default() })?;
            inst.save(&out)?;
            println!("wrote {}x{} instance (N_d = {}) to {}", inst.m(), inst.n(), inst.n_d(), out.display());
        }
        Command::Oracle { instance, out } => {
            let inst = load_instance(&instance)?;
            if inst.horizon() > 0 {
                write_json(&out, &OracleDump::from_table(&backward_induction(&inst)?))?;
            } else {
                let sol = stationary_values(&inst, DEFAULT_TOLERANCE)?;
                let dump = StationaryDump {
                    states: sol.space.states().map(|s| s.as_slice().to_vec()).collect(),
                    values: sol.values.clone(),
                    actions: sol.policy.iter().map(|q| q.as_slice().chunks(q.cols()).map(<[u32]>::to_vec).collect()).collect(),
                };
                write_json(&out, &dump)?;
            }
            println!("wrote oracle to {}", out.display());
        }
        Command::Train { method, instance, seed, config, beta, kappa, divergence, out } => {
            let inst = load_instance(&instance)?;
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            cfg.deep.divergence = divergence.spec();
            cfg.validate()?;
            let schedule = match beta {
                Some(b) => BetaSchedule::Fixed { beta: b },
                None => BetaSchedule::Linear { kappa },
            };
            std::fs::create_dir_all(&out)?;
            let manifest = cfg.manifest()?;
            let record = match method {
                Method::Ql | Method::Dkql => {
                    let model = TabularModel::new(&inst, cfg.tabular.state_cap, cfg.tabular.action_cap)?;
                    let (tm, prior) = if method == Method::Dkql {
                        let tm = TabularMethod::DomainKnowledge { beta: schedule, divergence: cfg.deep.divergence };
                        (tm, Some(make_prior_policy(&model, cfg.tabular.prior_smoothing)?))
                    } else {
                        (TabularMethod::QLearning, None)
                    };
                    let (q, rec) = train_tabular(&model, &cfg.learning_config(), &tm, prior.as_ref(), seed, |_, _| {})?;
                    TabularCheckpoint::new(&q, &model, &tm, seed)?.save(out.join("checkpoint.json"))?;
                    rec
                }
                Method::Ddpg | Method::Dkddpg => {
                    let dm = if method == Method::Dkddpg { DeepMethod::DomainKnowledge { beta: schedule } } else { DeepMethod::Ddpg };
                    let (agent, rec) = train_agent(&inst, &cfg.deep_config(), &dm, seed)?;
                    AgentCheckpoint::new(&agent, &inst, &dm, cfg.exploration, seed)?.save(out.join("checkpoint.json"))?;
                    rec
                }
            };
            let mut csv = Vec::new();
            record.write_csv(&mut csv, &manifest)?;
            std::fs::write(out.join("record.csv"), csv)?;
            println!(
                "{} seed {seed}: {} episodes, converged {}, final average Q {:.6}",
                record.method,
                record.rows.len(),
                record.summary.converged,
                record.final_avg_q().unwrap_or(0.0)
            );
            if record.summary.timed_out {
                eprintln!("wall-clock cap reached; partial record written");
                return Ok(EXIT_TIMEOUT);
            }
        }
        Command::Evaluate { checkpoint, instance, seed, horizon } => {
            let inst = load_instance(&instance)?;
            let text = std::fs::read_to_string(&checkpoint)?;
            let total = if let Ok(agent_ck) = serde_json::from_str::<AgentCheckpoint>(&text) {
                agent_ck.check_instance(&inst)?;
                let agent = agent_ck.restore(&Default::default())?;
                evaluate_trained(&DeepGreedy { agent: &agent, n_d: inst.n_d() }, &inst, horizon, seed)?
            } else {
                let tab: TabularCheckpoint = serde_json::from_str(&text).map_err(Error::from)?;
                let model = TabularModel::new(&inst, usize::MAX, usize::MAX)?;
                let q = tab.restore(&model)?;
                evaluate_trained(&TabularGreedy { model: &model, table: &q }, &inst, horizon, seed)?
            };
            println!("{total}");
        }
        Command::Compare { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_comparison(&cfg)?;
            let files = report.write(&out)?;
            println!("wrote {} files to {}", files.len(), out.display());
            if !report.audit.is_clean() {
                bail!("reward identity audit failed: {:?}", report.audit);
            }
            if report.timed_out {
                eprintln!("wall-clock cap reached in at least one cell; partial results written");
                return Ok(EXIT_TIMEOUT);
            }
        }
        Command::Verify { episodes, seeds, required } => {
            let settings = VerifySettings { episodes, seeds: (0..seeds).collect(), ..VerifySettings::default() };
            let report = run_theorem_suite(&verification_instance(), &settings)?;
            for r in &report.runs {
                println!(
                    "{:?} seed {}: early {:.4} final {:.4} {}",
                    r.regime,
                    r.seed,
                    r.early_distance,
                    r.final_distance,
                    if r.passed { "PASS" } else { "FAIL" }
                );
            }
            let ok = [Regime::FixedBeta, Regime::LinearBeta].iter().all(|&g| report.passes(g) >= required);
            println!("{}", if ok { "verification PASS" } else { "verification FAIL" });
            return Ok(if ok { 0 } else { 1 });
        }
    }
    Ok(0)
}
