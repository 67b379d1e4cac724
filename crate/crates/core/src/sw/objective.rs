//! The lower-bound welfare objective and its gradient.
//!
//! With exposures `e_c(j) = Σ_k M_c(j,k) v(k)` and `w_cj = p_cj p_jc`,
//!
//! ```text
//! SW_lb(M) = Σ_{c,j} w_cj · v(1 + X_cj) · e_c(j),
//! X_cj     = Σ_{c' : p_jc' > p_jc} p_c'j · e_c'(j)
//! ```
//!
//! (strict inequality: equally scored candidates do not compete). The
//! objective depends on `M_c` only through `e_c`, so the gradient has the
//! rank-one form `∂SW_lb/∂M_c(j,k) = G_cj · v(k)` with
//!
//! ```text
//! G_cj = w_cj v(1 + X_cj) + p_cj Σ_{c'' : p_jc'' < p_jc} w_c''j v'(1 + X_c''j) e_c''(j).
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::examination::ExaminationFunction;
use crate::market::{Matrix, PreferenceMatrices};
use crate::policy::{argsort_desc, StochasticPolicy};

/// Position-marginal examination probability of each job:
/// `e(j) = Σ_k M(j,k) v(k)`.
pub fn expected_exposure(m: &Matrix, v: &ExaminationFunction) -> Vec<f64> {
    let vk = v.rank_values(m.cols());
    exposure_with(m, &vk)
}

pub(crate) fn exposure_with(m: &Matrix, vk: &[f64]) -> Vec<f64> {
    m.iter_rows().map(|row| row.iter().zip(vk).map(|(a, b)| a * b).sum()).collect()
}

/// `|C| x |J|` exposure matrix for the whole policy.
pub(crate) fn exposure_matrix(policy: &StochasticPolicy, vk: &[f64]) -> Matrix {
    let nj = policy.num_jobs();
    let mut e = Matrix::zeros(policy.num_candidates(), nj);
    for (c, m) in policy.matrices().iter().enumerate() {
        e.row_mut(c).copy_from_slice(&exposure_with(m, vk));
    }
    e
}

/// For every employer, candidates grouped by equal `p_jc`, best group first.
pub(crate) fn strict_groups(prefs: &PreferenceMatrices) -> Vec<Vec<Vec<usize>>> {
    prefs
        .p_jc()
        .iter_rows()
        .map(|row| {
            let order = argsort_desc(row);
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for c in order {
                match groups.last_mut() {
                    Some(g) if row[g[0]] == row[c] => g.push(c),
                    _ => groups.push(vec![c]),
                }
            }
            groups
        })
        .collect()
}

/// `X_cj`: expected number of strictly preferred applicants at `j`.
pub(crate) fn competition(prefs: &PreferenceMatrices, exposure: &Matrix, groups: &[Vec<Vec<usize>>]) -> Matrix {
    let mut x = Matrix::zeros(prefs.num_candidates(), prefs.num_jobs());
    for (j, job_groups) in groups.iter().enumerate() {
        let mut higher = 0.0;
        for g in job_groups {
            for &c in g {
                x[(c, j)] = higher;
            }
            for &c in g {
                higher += prefs.p_cj()[(c, j)] * exposure[(c, j)];
            }
        }
    }
    x
}

pub fn approx_sw(policy: &StochasticPolicy, prefs: &PreferenceMatrices, v: &ExaminationFunction) -> f64 {
    let vk = v.rank_values(prefs.num_jobs());
    let groups = strict_groups(prefs);
    approx_sw_with(policy, prefs, v, &vk, &groups)
}

pub(crate) fn approx_sw_with(
    policy: &StochasticPolicy,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
    vk: &[f64],
    groups: &[Vec<Vec<usize>>],
) -> f64 {
    let e = exposure_matrix(policy, vk);
    let x = competition(prefs, &e, groups);
    let mut total = 0.0;
    for c in 0..prefs.num_candidates() {
        for j in 0..prefs.num_jobs() {
            let w = prefs.p_cj()[(c, j)] * prefs.p_jc()[(j, c)];
            total += w * v.eval(1.0 + x[(c, j)]) * e[(c, j)];
        }
    }
    total
}

/// `G_cj = ∂SW_lb / ∂e_c(j)`; the full gradient is `G_cj · v(k)`.
pub fn exposure_gradient(
    policy: &StochasticPolicy,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
) -> Result<Matrix> {
    let vk = v.rank_values(prefs.num_jobs());
    let groups = strict_groups(prefs);
    let e = exposure_matrix(policy, &vk);
    exposure_gradient_with(prefs, v, &e, &groups)
}

pub(crate) fn exposure_gradient_with(
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
    e: &Matrix,
    groups: &[Vec<Vec<usize>>],
) -> Result<Matrix> {
    let x = competition(prefs, e, groups);
    let mut g = Matrix::zeros(prefs.num_candidates(), prefs.num_jobs());
    for (j, job_groups) in groups.iter().enumerate() {
        // Walk from the least preferred group up, accumulating the chain-rule
        // term contributed by everyone strictly below.
        let mut lower = 0.0;
        for grp in job_groups.iter().rev() {
            for &c in grp {
                let w = prefs.p_cj()[(c, j)] * prefs.p_jc()[(j, c)];
                g[(c, j)] = w * v.eval(1.0 + x[(c, j)]) + prefs.p_cj()[(c, j)] * lower;
            }
            for &c in grp {
                let w = prefs.p_cj()[(c, j)] * prefs.p_jc()[(j, c)];
                lower += w * v.derivative_unchecked(1.0 + x[(c, j)])? * e[(c, j)];
            }
        }
    }
    Ok(g)
}

/// Full gradient `∂SW_lb / ∂M_c(j,k)`, one matrix per candidate.
pub fn grad_approx_sw(
    policy: &StochasticPolicy,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
) -> Result<Vec<Matrix>> {
    // Surface the unsupported-kind error even for empty inputs.
    v.derivative_unchecked(1.0)?;
    let g = exposure_gradient(policy, prefs, v)?;
    let vk = v.rank_values(prefs.num_jobs());
    Ok((0..prefs.num_candidates())
        .map(|c| Matrix::from_fn(prefs.num_jobs(), prefs.num_jobs(), |j, k| g[(c, j)] * vk[k]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn exposure_of_identity_and_uniform() {
        let v = ExaminationFunction::Inv;
        let e = expected_exposure(&Matrix::identity(4), &v);
        for (j, x) in e.iter().enumerate() {
            assert!((x - 1.0 / (j + 1) as f64).abs() < 1e-15);
        }
        let n = 5;
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum::<f64>() / n as f64;
        let e = expected_exposure(&Matrix::filled(n, n, 1.0 / n as f64), &v);
        assert!(e.iter().all(|x| (x - h).abs() < 1e-15));
    }

    #[test]
    fn exposure_of_permutation() {
        // job 0 at position 2, job 1 at 0, job 2 at 1
        let m = Matrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let v = ExaminationFunction::Exp;
        let e = expected_exposure(&m, &v);
        assert_eq!(e, vec![v.at_rank(3), v.at_rank(1), v.at_rank(2)]);
    }

    #[test]
    fn single_pair_objective_and_gradient() {
        let prefs = PreferenceMatrices::from_rows(&[[0.6]], &[[0.7]]).unwrap();
        let policy = StochasticPolicy::uniform(1, 1);
        let v = ExaminationFunction::Inv;
        assert!((approx_sw(&policy, &prefs, &v) - 0.42).abs() < 1e-15);
        let g = grad_approx_sw(&policy, &prefs, &v).unwrap();
        assert!((g[0][(0, 0)] - 0.42).abs() < 1e-15);
    }

    #[test]
    fn single_candidate_gradient_is_weight_times_position_value() {
        let prefs = PreferenceMatrices::from_rows(&[[0.6, 0.3]], &[[0.7], [0.2]]).unwrap();
        let policy = StochasticPolicy::uniform(1, 2);
        let v = ExaminationFunction::Log;
        let g = grad_approx_sw(&policy, &prefs, &v).unwrap();
        for j in 0..2 {
            let w = prefs.p_cj()[(0, j)] * prefs.p_jc()[(j, 0)];
            for k in 0..2 {
                assert!((g[0][(j, k)] - w * v.at_rank(1) * v.at_rank(k + 1)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_candidates_one_job_hand_expansion() {
        // employer prefers candidate 1
        let (p0, p1, s0, s1) = (0.8, 0.5, 0.3, 0.9);
        let prefs = PreferenceMatrices::from_rows(&[[p0], [p1]], &[[s0, s1]]).unwrap();
        let policy = StochasticPolicy::uniform(2, 1);
        let v = ExaminationFunction::Inv;
        let expected = p1 * s1 * 1.0 + p0 * s0 * v.eval(1.0 + p1);
        assert!((approx_sw(&policy, &prefs, &v) - expected).abs() < 1e-15);
    }

    #[test]
    fn ties_do_not_compete() {
        let prefs = PreferenceMatrices::from_rows(&[[0.8], [0.5]], &[[0.4, 0.4]]).unwrap();
        let policy = StochasticPolicy::uniform(2, 1);
        let v = ExaminationFunction::Inv;
        let expected = 0.8 * 0.4 + 0.5 * 0.4;
        assert!((approx_sw(&policy, &prefs, &v) - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_preferences_give_zero_gradient() {
        let prefs = PreferenceMatrices::new(Matrix::zeros(3, 3), Matrix::zeros(3, 3)).unwrap();
        let policy = StochasticPolicy::uniform(3, 3);
        let g = grad_approx_sw(&policy, &prefs, &ExaminationFunction::Exp).unwrap();
        assert!(g.iter().all(|m| m.as_slice().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn table_gradient_is_unsupported() {
        let prefs = PreferenceMatrices::from_rows(&[[0.6]], &[[0.7]]).unwrap();
        let v = ExaminationFunction::table(vec![1.0]).unwrap();
        let err = grad_approx_sw(&StochasticPolicy::uniform(1, 1), &prefs, &v).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
