//! Ranking policies: one ranked list per candidate (deterministic) or one
//! doubly stochastic position matrix per candidate (stochastic).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::market::Matrix;

/// Row/column sum tolerance for doubly stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Indices of `scores` sorted by descending score, ties by ascending index.
///
/// NaN scores compare as equal to everything and therefore keep index order.
pub fn argsort_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// Checks that `ranking` is a permutation of `0..n`.
pub(crate) fn check_permutation(ranking: &[usize], n: usize) -> Result<()> {
    if ranking.len() != n {
        return Err(Error::InvalidInput(format!("ranking has {} entries, expected {n}", ranking.len())));
    }
    let mut seen = vec![false; n];
    for &j in ranking {
        if j >= n || core::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidInput(format!("ranking {ranking:?} is not a permutation")));
        }
    }
    Ok(())
}

/// One ranked list of jobs per candidate: `rankings[c][k]` is the job shown
/// at 0-based position `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicPolicy {
    rankings: Vec<Vec<usize>>,
}

impl DeterministicPolicy {
    pub fn new(rankings: Vec<Vec<usize>>) -> Result<Self> {
        let n = rankings.first().map_or(0, Vec::len);
        for r in &rankings {
            check_permutation(r, n)?;
        }
        Ok(Self { rankings })
    }

    /// Ranks every row of `scores` in descending order.
    pub fn from_scores(scores: &Matrix) -> Self {
        Self { rankings: scores.iter_rows().map(argsort_desc).collect() }
    }

    pub fn rankings(&self) -> &[Vec<usize>] {
        &self.rankings
    }

    pub fn ranking(&self, candidate: usize) -> &[usize] {
        &self.rankings[candidate]
    }

    pub fn num_candidates(&self) -> usize {
        self.rankings.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.rankings.first().map_or(0, Vec::len)
    }

    /// `positions[c][j]`: 0-based position of job `j` in candidate `c`'s list.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        self.rankings.iter().map(|r| inverse_permutation(r)).collect()
    }

    /// The equivalent stochastic policy made of permutation matrices.
    pub fn to_stochastic(&self) -> StochasticPolicy {
        let n = self.num_jobs();
        let matrices = self
            .rankings
            .iter()
            .map(|r| {
                let mut m = Matrix::zeros(n, n);
                for (k, &j) in r.iter().enumerate() {
                    m[(j, k)] = 1.0;
                }
                m
            })
            .collect();
        StochasticPolicy { matrices }
    }
}

pub(crate) fn inverse_permutation(ranking: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; ranking.len()];
    for (k, &j) in ranking.iter().enumerate() {
        pos[j] = k;
    }
    pos
}

/// One doubly stochastic `|J| x |J|` matrix per candidate; entry `(j, k)` is
/// the probability that job `j` is shown at 0-based position `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StochasticPolicy {
    matrices: Vec<Matrix>,
}

impl StochasticPolicy {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let n = matrices.first().map_or(0, Matrix::rows);
        for (c, m) in matrices.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::Shape { expected: (n, n), found: m.shape() });
            }
            check_doubly_stochastic(m, STOCHASTIC_TOL)
                .map_err(|e| Error::InvalidInput(format!("candidate {c}: {e}")))?;
        }
        Ok(Self { matrices })
    }

    pub(crate) fn new_unchecked(matrices: Vec<Matrix>) -> Self {
        Self { matrices }
    }

    pub fn into_matrices(self) -> Vec<Matrix> {
        self.matrices
    }

    /// Every candidate gets the uniform matrix `11^T / n`.
    pub fn uniform(num_candidates: usize, num_jobs: usize) -> Self {
        let m = Matrix::filled(num_jobs, num_jobs, 1.0 / num_jobs as f64);
        Self { matrices: vec![m; num_candidates] }
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, candidate: usize) -> &Matrix {
        &self.matrices[candidate]
    }

    pub fn num_candidates(&self) -> usize {
        self.matrices.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.matrices.first().map_or(0, Matrix::rows)
    }

    /// Largest deviation of any row or column sum from one.
    pub fn max_marginal_error(&self) -> f64 {
        self.matrices.iter().map(marginal_error).fold(0.0, f64::max)
    }
}

pub(crate) fn marginal_error(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut err: f64 = 0.0;
    let mut col = vec![0.0; m.cols()];
    for i in 0..n {
        let row = m.row(i);
        err = err.max((row.iter().sum::<f64>() - 1.0).abs());
        for (c, x) in col.iter_mut().zip(row) {
            *c += x;
        }
    }
    col.iter().map(|s| (s - 1.0).abs()).fold(err, f64::max)
}

pub(crate) fn check_doubly_stochastic(m: &Matrix, tol: f64) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::Shape { expected: (m.rows(), m.rows()), found: m.shape() });
    }
    if let Some(bad) = m.as_slice().iter().find(|x| !(-tol..=1.0 + tol).contains(*x)) {
        return Err(Error::InvalidInput(format!("entry {bad} outside [0, 1]")));
    }
    let err = marginal_error(m);
    if err > tol {
        return Err(Error::InvalidInput(format!("row/column sums deviate from 1 by {err:e}")));
    }
    Ok(())
}

/// Either kind of ranking policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Deterministic(DeterministicPolicy),
    Stochastic(StochasticPolicy),
}

impl Policy {
    pub fn num_candidates(&self) -> usize {
        match self {
            Self::Deterministic(p) => p.num_candidates(),
            Self::Stochastic(p) => p.num_candidates(),
        }
    }

    pub fn num_jobs(&self) -> usize {
        match self {
            Self::Deterministic(p) => p.num_jobs(),
            Self::Stochastic(p) => p.num_jobs(),
        }
    }
}

impl From<DeterministicPolicy> for Policy {
    fn from(p: DeterministicPolicy) -> Self {
        Self::Deterministic(p)
    }
}

impl From<StochasticPolicy> for Policy {
    fn from(p: StochasticPolicy) -> Self {
        Self::Stochastic(p)
    }
}
