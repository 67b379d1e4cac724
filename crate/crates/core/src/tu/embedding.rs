//! Dot-product form of the equilibrium ranking.
//!
//! If `p_cj = <φ1(c), ψ1(j)>` and `p_jc = <φ2(c), ψ2(j)>`, then
//! `2β ln μ_cj = <φ(c), ψ(j)>` with
//! `φ(c) = [φ1(c), φ2(c), β ln μ_c0, 1]` and
//! `ψ(j) = [ψ1(j), ψ2(j), 1, β ln μ_0j]`, so ranking reduces to maximum
//! inner-product search.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::market::Matrix;
use crate::math;
use crate::tu::EquilibriumMatching;

/// Rows checked against the equilibrium when building embeddings.
const FIDELITY_SAMPLE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dim: usize,
    /// `|C| x (2d + 2)`
    pub candidate_vectors: Matrix,
    /// `|J| x (2d + 2)`
    pub job_vectors: Matrix,
    /// Largest deviation, over a sample of pairs, between the features'
    /// implied `p_cj + p_jc` and the value implied by the equilibrium.
    /// Large values mean the features do not describe the solved market.
    pub max_feature_deviation: f64,
}

impl EmbeddingSet {
    pub fn num_candidates(&self) -> usize {
        self.candidate_vectors.rows()
    }

    pub fn num_jobs(&self) -> usize {
        self.job_vectors.rows()
    }

    pub fn score(&self, candidate: usize, job: usize) -> f64 {
        dot(self.candidate_vectors.row(candidate), self.job_vectors.row(job))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_shape(m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Shape { expected: (rows, cols), found: m.shape() });
    }
    Ok(())
}

pub fn build_embeddings(
    phi1: &Matrix,
    phi2: &Matrix,
    psi1: &Matrix,
    psi2: &Matrix,
    eq: &EquilibriumMatching,
) -> Result<EmbeddingSet> {
    let (nc, nj) = eq.mu.shape();
    let d = phi1.cols();
    check_shape(phi1, nc, d)?;
    check_shape(phi2, nc, d)?;
    check_shape(psi1, nj, d)?;
    check_shape(psi2, nj, d)?;
    if eq.mu_c0.len() != nc || eq.mu_0j.len() != nj {
        return Err(Error::InvalidInput("equilibrium outside masses do not match mu".into()));
    }
    let beta = eq.beta;
    let dim = 2 * d + 2;

    let mut cand = Matrix::zeros(nc, dim);
    for c in 0..nc {
        let row = cand.row_mut(c);
        row[..d].copy_from_slice(phi1.row(c));
        row[d..2 * d].copy_from_slice(phi2.row(c));
        row[2 * d] = beta * math::ln(eq.mu_c0[c]);
        row[2 * d + 1] = 1.0;
    }
    let mut jobs = Matrix::zeros(nj, dim);
    for j in 0..nj {
        let row = jobs.row_mut(j);
        row[..d].copy_from_slice(psi1.row(j));
        row[d..2 * d].copy_from_slice(psi2.row(j));
        row[2 * d] = 1.0;
        row[2 * d + 1] = beta * math::ln(eq.mu_0j[j]);
    }

    // p_cj + p_jc = 2β ln μ_cj - β ln μ_c0 - β ln μ_0j at the fixed point.
    let mut deviation: f64 = 0.0;
    let c_step = (nc / FIDELITY_SAMPLE).max(1);
    let j_step = (nj / FIDELITY_SAMPLE).max(1);
    for c in (0..nc).step_by(c_step) {
        for j in (0..nj).step_by(j_step) {
            let features = dot(phi1.row(c), psi1.row(j)) + dot(phi2.row(c), psi2.row(j));
            let implied =
                2.0 * beta * math::ln(eq.mu[(c, j)]) - beta * math::ln(eq.mu_c0[c]) - beta * math::ln(eq.mu_0j[j]);
            deviation = deviation.max((features - implied).abs());
        }
    }

    Ok(EmbeddingSet { dim, candidate_vectors: cand, job_vectors: jobs, max_feature_deviation: deviation })
}

/// The `k` jobs with the largest inner product with `candidate`'s vector,
/// best first, ties by ascending job index. Exact linear scan.
pub fn top_k_by_dot(emb: &EmbeddingSet, candidate: usize, k: usize) -> Result<Vec<usize>> {
    let nj = emb.num_jobs();
    if k == 0 || k > nj {
        return Err(Error::InvalidInput(alloc::format!("k = {k} outside 1..={nj}")));
    }
    if candidate >= emb.num_candidates() {
        return Err(Error::InvalidInput(alloc::format!("candidate {candidate} out of range")));
    }
    let query = emb.candidate_vectors.row(candidate);
    let scores: Vec<f64> = emb.job_vectors.iter_rows().map(|v| dot(query, v)).collect();
    let order = |&a: &usize, &b: &usize| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b));
    let mut idx: Vec<usize> = (0..nj).collect();
    if k < nj {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_by(order);
    Ok(idx)
}
