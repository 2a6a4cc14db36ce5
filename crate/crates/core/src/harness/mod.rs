//! Experiment plumbing: run records, convergence detection, instance
//! generation, metrics and orchestration.

mod checkpoint;
mod convergence;
mod evaluate;
mod experiment;
mod generate;
mod manifest;
mod record;
mod verify;

pub use checkpoint::TabularCheckpoint;
pub use convergence::{
    detect_convergence, Convergence, ConvergenceDetector, CHECKPOINT_SPACING, LARGE_THRESHOLD, SMALL_THRESHOLD,
    WINDOW,
};
pub use evaluate::{
    average_q_metric, evaluate_trained, oracle_average_value, Artifact, DeepGreedy, GreedyPolicy, TabularGreedy,
};
pub use experiment::{
    percent_change, read_comparison, run_comparison, CellResult, ComparisonReport, DeepSettings, ExperimentConfig,
    InstanceSource, KappaSearchSpec, MethodSpec, PairComparison, TabularSettings, COMPARISON_FILE, PAIRS_FILE, SERIES_DIR,
};
pub use generate::{generate_instance, generate_with, GeneratorSpec};
pub use manifest::{instance_digest, manifest_digest, sha256_hex};
pub use record::{EpisodeRecord, RunRecord, RunSummary, StepAudit};
pub use verify::{
    relative_distance, run_theorem_suite, verification_instance, Regime, TheoremRun, VerifyReport, VerifySettings,
};
