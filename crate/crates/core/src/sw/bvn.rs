//! Birkhoff–von Neumann decomposition and ranking sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::market::Matrix;
use crate::policy::{check_doubly_stochastic, check_permutation};

/// Support threshold used when none is given.
pub const DEFAULT_BVN_EPS: f64 = 1e-12;

/// Residual mass below which a missing perfect matching is attributed to
/// rounding rather than to an infeasible input.
const ROUNDING_SLACK: f64 = 1e-9;

/// A convex combination of permutation matrices. Each term's ranking lists
/// the job at every position, like a row of a deterministic policy.
#[derive(Debug, Clone, PartialEq)]
pub struct BvnDecomposition {
    terms: Vec<(f64, Vec<usize>)>,
    cumulative: Vec<f64>,
}

impl BvnDecomposition {
    /// Builds a decomposition from explicit terms; weights are normalised.
    pub fn new(terms: Vec<(f64, Vec<usize>)>) -> Result<Self> {
        let n = terms.first().map_or(0, |t| t.1.len());
        if terms.is_empty() {
            return Err(Error::InvalidInput("decomposition has no terms".into()));
        }
        for (w, r) in &terms {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("term weight {w} is not positive")));
            }
            check_permutation(r, n)?;
        }
        Ok(Self::normalised(terms))
    }

    fn normalised(mut terms: Vec<(f64, Vec<usize>)>) -> Self {
        let total: f64 = terms.iter().map(|t| t.0).sum();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(terms.len());
        for t in &mut terms {
            t.0 /= total;
            acc += t.0;
            cumulative.push(acc);
        }
        Self { terms, cumulative }
    }

    pub fn terms(&self) -> &[(f64, Vec<usize>)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn size(&self) -> usize {
        self.terms.first().map_or(0, |t| t.1.len())
    }

    /// `Σ_t w_t P_t` with `P_t(j, k) = 1` iff job `j` sits at position `k`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.size();
        let mut m = Matrix::zeros(n, n);
        for (w, r) in &self.terms {
            for (k, &j) in r.iter().enumerate() {
                m[(j, k)] += w;
            }
        }
        m
    }
}

/// Kuhn augmenting-path search from `row`, over columns with
/// `residual > eps`. Iterative to keep stack use flat.
fn augment(
    residual: &Matrix,
    eps: f64,
    row: usize,
    col_of: &mut [Option<usize>],
    row_of: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    let n = residual.cols();
    visited.iter_mut().for_each(|v| *v = false);
    // stack of (row, next column to try); `via[r]` is the column that led to r
    let mut stack: Vec<(usize, usize)> = vec![(row, 0)];
    let mut via: Vec<usize> = Vec::new();
    while let Some(&mut (r, ref mut next)) = stack.last_mut() {
        let mut advanced = false;
        while *next < n {
            let k = *next;
            *next += 1;
            if visited[k] || residual[(r, k)] <= eps {
                continue;
            }
            visited[k] = true;
            match row_of[k] {
                None => {
                    // Flip the alternating path back to the root.
                    let mut col = k;
                    for depth in (0..stack.len()).rev() {
                        let rr = stack[depth].0;
                        let prev = col_of[rr];
                        col_of[rr] = Some(col);
                        row_of[col] = Some(rr);
                        if depth > 0 {
                            col = via[depth - 1];
                            debug_assert_eq!(prev, Some(col));
                        }
                    }
                    return true;
                }
                Some(r2) => {
                    via.push(k);
                    stack.push((r2, 0));
                    advanced = true;
                    break;
                }
            }
        }
        if !advanced {
            stack.pop();
            via.pop();
        }
    }
    false
}

/// Greedy Birkhoff decomposition: repeatedly take a perfect matching on the
/// support `{entries > eps}` and subtract its smallest entry.
pub fn bvn_decompose(m: &Matrix, eps: f64) -> Result<BvnDecomposition> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    check_doubly_stochastic(m, eps.max(1e-9))?;
    let n = m.rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }

    let mut residual = m.clone();
    let mut col_of: Vec<Option<usize>> = vec![None; n];
    let mut row_of: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut terms = Vec::new();
    let mut remaining = 1.0;

    while remaining > eps {
        // Drop matched edges that left the support, then repair.
        for r in 0..n {
            if let Some(k) = col_of[r] {
                if residual[(r, k)] <= eps {
                    col_of[r] = None;
                    row_of[k] = None;
                }
            }
        }
        let mut perfect = true;
        for r in 0..n {
            if col_of[r].is_none() && !augment(&residual, eps, r, &mut col_of, &mut row_of, &mut visited) {
                perfect = false;
                break;
            }
        }
        if !perfect {
            if remaining <= ROUNDING_SLACK {
                break;
            }
            return Err(Error::Infeasible { residual_mass: remaining });
        }

        let w = (0..n).map(|r| residual[(r, col_of[r].unwrap())]).fold(f64::INFINITY, f64::min);
        let mut ranking = vec![0; n];
        for r in 0..n {
            let k = col_of[r].unwrap();
            ranking[k] = r;
            let x = &mut residual[(r, k)];
            *x -= w;
            if *x <= eps {
                *x = 0.0;
            }
        }
        remaining -= w;
        terms.push((w, ranking));
    }

    if terms.is_empty() {
        return Err(Error::InvalidInput("matrix has no mass above eps".into()));
    }
    Ok(BvnDecomposition::normalised(terms))
}

/// Draws one term with probability equal to its weight.
pub fn sample_ranking<'a, R: Rng + ?Sized>(decomp: &'a BvnDecomposition, rng: &mut R) -> &'a [usize] {
    let u: f64 = rng.gen::<f64>() * decomp.cumulative.last().copied().unwrap_or(1.0);
    let i = decomp.cumulative.partition_point(|&c| c <= u).min(decomp.terms.len() - 1);
    &decomp.terms[i].1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn permutation_matrix_is_one_term() {
        let m = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        let d = bvn_decompose(&m, DEFAULT_BVN_EPS).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.terms()[0].0, 1.0);
        // job 2 at position 0, job 0 at 1, job 1 at 2
        assert_eq!(d.terms()[0].1, vec![2, 0, 1]);
        assert_eq!(d.reconstruct(), m);
    }

    #[test]
    fn uniform_two_by_two() {
        let d = bvn_decompose(&Matrix::filled(2, 2, 0.5), DEFAULT_BVN_EPS).unwrap();
        assert_eq!(d.len(), 2);
        let mut rankings: Vec<_> = d.terms().iter().map(|t| t.1.clone()).collect();
        rankings.sort();
        assert_eq!(rankings, vec![vec![0, 1], vec![1, 0]]);
        assert!(d.terms().iter().all(|t| (t.0 - 0.5).abs() < 1e-15));
    }

    #[test]
    fn rejects_non_doubly_stochastic() {
        let m = Matrix::from_rows(&[[0.9, 0.1], [0.9, 0.1]]).unwrap();
        assert!(bvn_decompose(&m, DEFAULT_BVN_EPS).is_err());
        assert!(bvn_decompose(&Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn single_term_always_sampled() {
        let d = BvnDecomposition::new(vec![(1.0, vec![1, 0, 2])]).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_ranking(&d, &mut rng), &[1, 0, 2]);
        }
    }

    #[test]
    fn explicit_terms_are_validated() {
        assert!(BvnDecomposition::new(vec![]).is_err());
        assert!(BvnDecomposition::new(vec![(0.0, vec![0])]).is_err());
        assert!(BvnDecomposition::new(vec![(1.0, vec![0, 0])]).is_err());
        let d = BvnDecomposition::new(vec![(2.0, vec![0, 1]), (2.0, vec![1, 0])]).unwrap();
        assert_eq!(d.terms()[0].0, 0.5);
    }
}
