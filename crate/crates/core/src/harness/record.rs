use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::convergence::Convergence;
use crate::env::StepOutcome;
use crate::error::{Error, Result};

/// One row of the per-episode training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "avg_Q")]
    pub avg_q: f64,
    pub episode_reward: f64,
    pub infeasible_action_count: u64,
    pub beta: f64,
    pub epsilon: f64,
    pub wall_ms: u64,
}

/// Tally of the reward-identity checks over every simulated step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepAudit {
    pub steps: u64,
    pub identity_violations: u64,
    pub feasible_penalty_violations: u64,
}

impl StepAudit {
    pub fn record(&mut self, outcome: &StepOutcome, feasible: bool) {
        self.steps += 1;
        if outcome.net_reward.to_bits()
            != (outcome.raw_reward - outcome.demand_penalty - outcome.capacity_penalty).to_bits()
        {
            self.identity_violations += 1;
        }
        if feasible && (outcome.demand_penalty != 0.0 || outcome.capacity_penalty != 0.0) {
            self.feasible_penalty_violations += 1;
        }
    }

    pub fn merge(&mut self, other: &StepAudit) {
        self.steps += other.steps;
        self.identity_violations += other.identity_violations;
        self.feasible_penalty_violations += other.feasible_penalty_violations;
    }

    pub fn is_clean(&self) -> bool {
        self.identity_violations == 0 && self.feasible_penalty_violations == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub episodes_to_convergence: Option<usize>,
    pub time_to_convergence_ms: Option<u64>,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub rows: Vec<EpisodeRecord>,
    pub summary: RunSummary,
    pub audit: StepAudit,
}

impl RunRecord {
    pub fn new(method: impl Into<String>, seed: u64) -> Self {
        Self { method: method.into(), seed, rows: Vec::new(), summary: RunSummary::default(), audit: StepAudit::default() }
    }

    pub fn push(&mut self, row: EpisodeRecord) {
        debug_assert!(self.rows.last().is_none_or(|r| r.episode < row.episode));
        self.rows.push(row);
    }

    pub fn mark_converged(&mut self, at: Convergence) {
        self.summary.converged = true;
        self.summary.episodes_to_convergence = Some(at.episodes);
        self.summary.time_to_convergence_ms = self.rows.get(at.episodes - 1).map(|r| r.wall_ms);
    }

    pub fn final_avg_q(&self) -> Option<f64> {
        self.rows.last().map(|r| r.avg_q)
    }

    pub fn avg_q_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.avg_q).collect()
    }

    /// Episode indices strictly increasing and summary consistent with rows.
    pub fn is_consistent(&self) -> bool {
        let increasing = self.rows.windows(2).all(|w| w[0].episode < w[1].episode);
        let summary = match self.summary.episodes_to_convergence {
            Some(e) => self.summary.converged && e >= 1 && e <= self.rows.len(),
            None => !self.summary.converged,
        };
        increasing && summary
    }

    /// CSV with a `# manifest_sha256=...` first line.
    pub fn write_csv<W: Write>(&self, mut out: W, manifest: &str) -> Result<()> {
        writeln!(out, "# manifest_sha256={manifest}")?;
        let mut writer = csv::Writer::from_writer(out);
        for row in &self.rows {
            writer.serialize(row)?;
        }
        if self.rows.is_empty() {
            writer.write_record([
                "episode",
                "steps",
                "avg_Q",
                "episode_reward",
                "infeasible_action_count",
                "beta",
                "epsilon",
                "wall_ms",
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Rows and manifest hash from a file written by [`Self::write_csv`].
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<(String, Vec<EpisodeRecord>)> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let manifest = first
            .trim_end()
            .strip_prefix("# manifest_sha256=")
            .ok_or_else(|| Error::Config("missing manifest header".into()))?
            .to_string();
        let mut reader = csv::Reader::from_reader(input);
        let rows = reader.deserialize().collect::<std::result::Result<Vec<EpisodeRecord>, _>>()?;
        Ok((manifest, rows))
    }
}
