//! Dense square linear assignment (Hungarian method with potentials,
//! shortest augmenting paths, `O(n³)`).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::market::Matrix;

/// Minimum-cost perfect assignment of rows to columns.
///
/// Returns `cols` with `cols[i]` the column assigned to row `i`.
pub fn solve(cost: &Matrix) -> Result<Vec<usize>> {
    let n = cost.rows();
    if cost.cols() != n {
        return Err(Error::Shape { expected: (n, n), found: cost.shape() });
    }
    if cost.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("assignment costs must be finite".into()));
    }

    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|u| *u = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let costs = cost.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::InvalidInput("assignment search stalled".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut cols = vec![0; n];
    for j in 1..=n {
        cols[row_of[j] - 1] = j - 1;
    }
    Ok(cols)
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &Matrix, cols: &[usize]) -> f64 {
    cols.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}
