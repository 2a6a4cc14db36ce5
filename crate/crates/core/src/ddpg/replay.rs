use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::State;
use crate::error::{Error, Result};

pub const DEFAULT_REPLAY_CAPACITY: usize = 1_000_000;

/// One stored transition. `action` is the executed (post-noise) actor
/// output before the integer transformation; `next_outstanding` keeps the
/// integer next state for the prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub next_outstanding: State,
}

/// Bounded FIFO; pushing past capacity drops the oldest entry.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    /// `size` uniform draws with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, size: usize, rng: &mut R) -> Vec<&'a Experience> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..size).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}
