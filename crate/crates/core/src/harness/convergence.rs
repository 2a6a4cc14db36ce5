use serde::{Deserialize, Serialize};

pub const CHECKPOINT_SPACING: usize = 10;
pub const WINDOW: usize = 3;
pub const SMALL_THRESHOLD: f64 = 0.02;
pub const LARGE_THRESHOLD: f64 = 0.03;

/// Where convergence was declared. `checkpoint` is the index at which the
/// window of sub-threshold changes became complete; `first_checkpoint` is
/// the start of that window, and `episodes` the number of episodes completed
/// when it was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    pub checkpoint: usize,
    pub first_checkpoint: usize,
    pub episodes: usize,
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev == cur {
        0.0
    } else if prev == 0.0 {
        f64::INFINITY
    } else {
        ((cur - prev) / prev).abs()
    }
}

/// First checkpoint k ≥ WINDOW at which the last WINDOW relative changes are
/// all below `threshold`, for a series sampled every CHECKPOINT_SPACING
/// episodes.
pub fn detect_convergence(series: &[f64], threshold: f64) -> Option<Convergence> {
    let mut run = 0;
    for k in 1..series.len() {
        if relative_change(series[k - 1], series[k]) < threshold {
            run += 1;
        } else {
            run = 0;
        }
        if run >= WINDOW {
            let first = k - WINDOW;
            return Some(Convergence { checkpoint: k, first_checkpoint: first, episodes: (first + 1) * CHECKPOINT_SPACING });
        }
    }
    None
}

/// Streaming form of [`detect_convergence`] fed once per episode.
#[derive(Clone, Debug)]
pub struct ConvergenceDetector {
    threshold: f64,
    series: Vec<f64>,
    result: Option<Convergence>,
}

impl ConvergenceDetector {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, series: Vec::new(), result: None }
    }

    pub fn is_checkpoint(episode: usize) -> bool {
        (episode + 1) % CHECKPOINT_SPACING == 0
    }

    /// Records `metric` if `episode` (0-based) closes a checkpoint and
    /// returns the convergence point once declared.
    pub fn observe(&mut self, episode: usize, metric: f64) -> Option<Convergence> {
        if self.result.is_none() && Self::is_checkpoint(episode) {
            self.series.push(metric);
            self.result = detect_convergence(&self.series, self.threshold);
        }
        self.result
    }

    pub fn result(&self) -> Option<Convergence> {
        self.result
    }

    pub fn series(&self) -> &[f64] {
        &self.series
    }
}
