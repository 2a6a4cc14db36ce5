use super::matrix::{MatchingMatrix, State};
use crate::error::{Error, Result};

/// Default cap on the number of feasible actions enumerated for one state.
pub const DEFAULT_ACTION_CAP: usize = 1_000_000;

/// All integer matrices Q ≥ 0 with row sums ≤ x and column sums ≤ c, in
/// ascending row-major lexicographic order (so the zero matrix comes first).
pub fn enumerate_feasible_actions(x: &State, capacities: &[u32], cap: usize) -> Result<Vec<MatchingMatrix>> {
    let m = x.len();
    let n = capacities.len();
    let cells = m * n;
    let mut out = Vec::new();
    if cells == 0 {
        return Ok(out);
    }
    let mut q = vec![0u32; cells];
    let mut row_left: Vec<u32> = x.as_slice().to_vec();
    let mut col_left: Vec<u32> = capacities.to_vec();
    // Odometer over cells; the last cell varies fastest.
    loop {
        out.push(MatchingMatrix::from_row_major(m, n, q.clone())?);
        if out.len() > cap {
            return Err(Error::ActionLimit { cap });
        }
        let mut k = cells;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            let (i, j) = (k / n, k % n);
            if row_left[i] > 0 && col_left[j] > 0 {
                q[k] += 1;
                row_left[i] -= 1;
                col_left[j] -= 1;
                break;
            }
            row_left[i] += q[k];
            col_left[j] += q[k];
            q[k] = 0;
        }
    }
}

/// Number of feasible actions without materializing them.
pub fn count_feasible_actions(x: &State, capacities: &[u32], cap: usize) -> Result<usize> {
    fn walk(k: usize, n: usize, rows: &mut [u32], cols: &mut [u32], count: &mut usize, cap: usize) -> bool {
        if k == rows.len() * n {
            *count += 1;
            return *count <= cap;
        }
        let (i, j) = (k / n, k % n);
        let top = rows[i].min(cols[j]);
        for v in 0..=top {
            rows[i] -= v;
            cols[j] -= v;
            let ok = walk(k + 1, n, rows, cols, count, cap);
            rows[i] += v;
            cols[j] += v;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut rows = x.as_slice().to_vec();
    let mut cols = capacities.to_vec();
    let mut count = 0;
    if walk(0, capacities.len(), &mut rows, &mut cols, &mut count, cap) {
        Ok(count)
    } else {
        Err(Error::ActionLimit { cap })
    }
}
