//! Transferable-utility equilibrium ranking.
//!
//! Under Gumbel preference noise of scale β, the equilibrium fractional
//! matching factorises as `μ_cj = K_cj · A_c · B_j` with kernel
//! `K_cj = exp((p_cj + p_jc) / 2β)`, `A_c² = μ_c0` and `B_j² = μ_0j` the
//! outside-option masses. [`solve_ipfp`] finds `A`, `B` by alternating
//! closed-form row and column updates; [`tu_policy`] ranks each candidate's
//! jobs by `μ_c·`.

mod embedding;
mod ipfp;

pub use embedding::{build_embeddings, top_k_by_dot, EmbeddingSet};
pub use ipfp::{
    candidate_demand, employer_demand, recover_transfers, solve_ipfp, solve_ipfp_with, tu_policy, EquilibriumMatching,
    TuConfig,
};
