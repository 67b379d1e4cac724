//! Exact expected number of matches.
//!
//! Applications are independent across candidates, so the number of
//! applicants ranked above `c` at employer `j` is Poisson-binomial. Its
//! distribution is built by the usual one-Bernoulli-at-a-time convolution
//! while walking `j`'s candidates in list order, giving
//! `E[matches_cj] = P_cj · p_jc · Σ_m Pr[B_cj = m] · v(1 + m)` in
//! `O(|C|² |J|)` overall.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::examination::ExaminationFunction;
use crate::market::{Matrix, PreferenceMatrices};
use crate::policy::{argsort_desc, Policy};
use crate::sw::expected_exposure;

/// Size guard on `|C| · |J|` for the exact oracle.
pub const EXACT_SW_MAX_CELLS: usize = 1_000_000;

/// `P_cj`: probability that `c` applies to `j` under the policy.
pub fn application_probabilities(
    policy: &Policy,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
) -> Result<Matrix> {
    let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());
    if (policy.num_candidates(), policy.num_jobs()) != (nc, nj) {
        return Err(Error::InvalidInput(format!(
            "policy covers {}x{} but the market is {nc}x{nj}",
            policy.num_candidates(),
            policy.num_jobs()
        )));
    }
    let mut q = Matrix::zeros(nc, nj);
    match policy {
        Policy::Deterministic(p) => {
            for (c, ranking) in p.rankings().iter().enumerate() {
                for (k, &j) in ranking.iter().enumerate() {
                    q[(c, j)] = v.at_rank(k + 1) * prefs.p_cj()[(c, j)];
                }
            }
        }
        Policy::Stochastic(p) => {
            for (c, m) in p.matrices().iter().enumerate() {
                for (j, e) in expected_exposure(m, v).into_iter().enumerate() {
                    q[(c, j)] = e * prefs.p_cj()[(c, j)];
                }
            }
        }
    }
    Ok(q)
}

/// Expected matches of every pair, `|C| x |J|`.
pub fn exact_match_matrix(policy: &Policy, prefs: &PreferenceMatrices, v: &ExaminationFunction) -> Result<Matrix> {
    let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());
    let cells = nc * nj;
    if cells > EXACT_SW_MAX_CELLS {
        return Err(Error::TooLarge { cells, limit: EXACT_SW_MAX_CELLS });
    }
    let q = application_probabilities(policy, prefs, v)?;
    let vk = v.rank_values(nc);
    let mut out = Matrix::zeros(nc, nj);
    // dist[m] = Pr[m of the candidates seen so far applied]
    let mut dist = vec![0.0; nc + 1];
    for (j, scores) in prefs.p_jc().iter_rows().enumerate() {
        dist.iter_mut().for_each(|d| *d = 0.0);
        dist[0] = 1.0;
        for (seen, c) in argsort_desc(scores).into_iter().enumerate() {
            let apply = q[(c, j)];
            let rank_value: f64 = dist[..=seen].iter().zip(&vk).map(|(d, v)| d * v).sum();
            out[(c, j)] = apply * scores[c] * rank_value;
            for m in (1..=seen + 1).rev() {
                dist[m] = dist[m] * (1.0 - apply) + dist[m - 1] * apply;
            }
            dist[0] *= 1.0 - apply;
        }
    }
    Ok(out)
}

/// Exact expected total number of matches.
pub fn exact_sw(policy: &Policy, prefs: &PreferenceMatrices, v: &ExaminationFunction) -> Result<f64> {
    Ok(exact_match_matrix(policy, prefs, v)?.as_slice().iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::naive_policy;
    use crate::policy::{DeterministicPolicy, StochasticPolicy};

    #[test]
    fn one_by_one() {
        let prefs = PreferenceMatrices::from_rows(&[[0.6]], &[[0.7]]).unwrap();
        let p = Policy::Deterministic(naive_policy(&prefs));
        let v = ExaminationFunction::Exp;
        assert!((exact_sw(&p, &prefs, &v).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn two_candidates_one_employer() {
        // employer prefers candidate 0
        let (q1, q2, s1, s2) = (0.8, 0.6, 0.9, 0.4);
        let prefs = PreferenceMatrices::from_rows(&[[q1], [q2]], &[[s1, s2]]).unwrap();
        let p = Policy::Deterministic(DeterministicPolicy::new(vec![vec![0], vec![0]]).unwrap());
        let expected = q1 * s1 + q2 * s2 * ((1.0 - q1) + 0.5 * q1);
        let got = exact_sw(&p, &prefs, &ExaminationFunction::Inv).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn ties_at_employer_favour_lower_index() {
        let prefs = PreferenceMatrices::from_rows(&[[1.0], [1.0]], &[[0.5, 0.5]]).unwrap();
        let p = Policy::Deterministic(naive_policy(&prefs));
        let m = exact_match_matrix(&p, &prefs, &ExaminationFunction::Inv).unwrap();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((m[(1, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_equivalent_stochastic_agree() {
        let prefs = crate::datagen::generate_market(&crate::datagen::SyntheticConfig::new(5, 0.4, 8).unwrap()).unwrap();
        let det = naive_policy(&prefs);
        let v = ExaminationFunction::Log;
        let a = exact_sw(&Policy::Deterministic(det.clone()), &prefs, &v).unwrap();
        let b = exact_sw(&Policy::Stochastic(det.to_stochastic()), &prefs, &v).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let prefs = PreferenceMatrices::new(Matrix::zeros(1001, 1000), Matrix::zeros(1000, 1001)).unwrap();
        let p = Policy::Stochastic(StochasticPolicy::default());
        assert!(matches!(exact_sw(&p, &prefs, &ExaminationFunction::Inv), Err(Error::TooLarge { .. })));
    }
}
