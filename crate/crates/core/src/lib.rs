//! Ranking policies for two-sided matching markets.
//!
//! Candidates browse ranked lists of employers and apply; employers browse
//! their applicants and accept. Both stages follow a position-based
//! examination model. This crate provides:
//!
//! * the conventional [`naive_policy`] and [`reciprocal_policy`] rankings,
//! * the transferable-utility equilibrium ranking ([`solve_ipfp`] +
//!   [`tu_policy`]) together with its dot-product embedding form,
//! * the social-welfare Frank–Wolfe baseline over per-candidate doubly
//!   stochastic matrices ([`solve_sw`]) and Birkhoff–von Neumann sampling,
//! * a Monte-Carlo market simulator, an exact expected-matches oracle and
//!   the Gini index for fairness.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. With `std`, the heavier loops run on the rayon pool; results are
//! bitwise identical for any thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod datagen;
pub mod examination;
pub mod market;
pub mod policies;
pub mod policy;
pub mod seed;
pub mod sim;
pub mod sw;
pub mod tu;

pub use error::{Error, Result};
pub use examination::ExaminationFunction;
pub use market::{Matrix, PreferenceMatrices};
pub use policies::{naive_policy, reciprocal_policy};
pub use policy::{argsort_desc, DeterministicPolicy, Policy, StochasticPolicy};

pub use datagen::{generate_market, SyntheticConfig};
pub use sim::{
    estimate_sw, exact_sw, gini, simulate_once, MarketOutcome, RankingSource, SwEstimate, EXACT_SW_MAX_CELLS,
};
pub use sw::{
    approx_sw, bvn_decompose, expected_exposure, grad_approx_sw, sample_ranking, solve_sw, solve_sw_traced,
    BvnDecomposition, LmoSolver, SwConfig,
};
pub use tu::{
    build_embeddings, recover_transfers, solve_ipfp, top_k_by_dot, tu_policy, EmbeddingSet, EquilibriumMatching,
    TuConfig,
};
