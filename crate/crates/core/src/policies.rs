//! Conventional baselines that rank by a per-pair score.

use crate::market::{Matrix, PreferenceMatrices};
use crate::policy::DeterministicPolicy;

/// Ranks jobs by the candidate's own score `p_cj`.
pub fn naive_policy(prefs: &PreferenceMatrices) -> DeterministicPolicy {
    DeterministicPolicy::from_scores(prefs.p_cj())
}

/// Ranks jobs by the product `p_cj · p_jc` (order-equivalent to the
/// geometric mean).
pub fn reciprocal_policy(prefs: &PreferenceMatrices) -> DeterministicPolicy {
    let p_jc = prefs.p_jc();
    let scores = Matrix::from_fn(prefs.num_candidates(), prefs.num_jobs(), |c, j| prefs.p_cj()[(c, j)] * p_jc[(j, c)]);
    DeterministicPolicy::from_scores(&scores)
}
