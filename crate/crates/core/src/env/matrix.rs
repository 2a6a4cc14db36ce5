use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense m x n real matrix stored row-major. Used for unit rewards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RewardMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// The action: integer quantities q_ij matched between demand type i and
/// supply type j. Ordering is lexicographic over the row-major entries,
/// which is the tie-break order used by every solver in this crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchingMatrix {
    rows: usize,
    cols: usize,
    q: Vec<u32>,
}

impl MatchingMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, q: vec![0; rows * cols] }
    }

    pub fn from_row_major(rows: usize, cols: usize, q: Vec<u32>) -> Result<Self> {
        if q.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot form a {rows}x{cols} matching",
                q.len()
            )));
        }
        Ok(Self { rows, cols, q })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.q[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        self.q[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.q
    }

    /// q̄_i = Σ_j q_ij
    pub fn row_totals(&self) -> Vec<u32> {
        self.q.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    /// q̄_j = Σ_i q_ij
    pub fn col_totals(&self) -> Vec<u32> {
        let mut totals = vec![0; self.cols];
        for row in self.q.chunks(self.cols) {
            for (t, v) in totals.iter_mut().zip(row) {
                *t += v;
            }
        }
        totals
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("matching matrices differ in shape".into()));
        }
        let q = self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, q })
    }
}

impl fmt::Display for MatchingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.q.chunks(self.cols).enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Outstanding demand vector x, each component within [0, N_d].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<u32>);

impl State {
    pub fn new(outstanding: Vec<u32>) -> Self {
        Self(outstanding)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}
