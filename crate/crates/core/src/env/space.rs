use super::instance::ProblemInstance;
use super::matrix::State;
use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 4_000_000;

/// The truncated state grid {0..N_d}^m with a mixed-radix index. Index order
/// equals lexicographic order of the state vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    dims: usize,
    limit: u32,
    size: usize,
}

impl StateSpace {
    pub fn new(dims: usize, limit: u32, cap: usize) -> Result<Self> {
        let size = u128::from(limit + 1).checked_pow(dims as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::StateSpaceLimit { size, cap });
        }
        Ok(Self { dims, limit, size: size as usize })
    }

    pub fn for_instance(instance: &ProblemInstance, cap: usize) -> Result<Self> {
        Self::new(instance.m(), instance.n_d(), cap)
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn index_of(&self, components: &[u32]) -> Option<usize> {
        if components.len() != self.dims {
            return None;
        }
        let radix = self.limit as usize + 1;
        let mut idx = 0usize;
        for &c in components {
            if c > self.limit {
                return None;
            }
            idx = idx * radix + c as usize;
        }
        Some(idx)
    }

    pub fn index(&self, state: &State) -> Result<usize> {
        self.index_of(state.as_slice())
            .ok_or_else(|| Error::UnknownState(state.as_slice().to_vec()))
    }

    pub fn components(&self, mut idx: usize, out: &mut [u32]) {
        let radix = self.limit as usize + 1;
        for slot in out.iter_mut().rev() {
            *slot = (idx % radix) as u32;
            idx /= radix;
        }
    }

    pub fn state(&self, idx: usize) -> State {
        let mut v = vec![0; self.dims];
        self.components(idx, &mut v);
        State::new(v)
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.size).map(move |i| self.state(i))
    }

    /// Index stride of component `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        (self.limit as usize + 1).pow((self.dims - 1 - axis) as u32)
    }
}
