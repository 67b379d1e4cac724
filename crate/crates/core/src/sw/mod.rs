//! Social-welfare maximisation baseline.
//!
//! Each candidate's stochastic ranking is a doubly stochastic position
//! matrix `M_c`. The objective is a Jensen lower bound on the expected
//! number of matches; it is maximised by Frank–Wolfe over the product of
//! Birkhoff polytopes, and rankings are served by sampling from a
//! Birkhoff–von Neumann decomposition of each `M_c`.

pub mod assignment;
mod bvn;
mod frank_wolfe;
mod objective;

pub use bvn::{bvn_decompose, sample_ranking, BvnDecomposition, DEFAULT_BVN_EPS};
pub use frank_wolfe::{solve_sw, solve_sw_traced, LmoSolver, SwConfig, SwSolution};
pub use objective::{approx_sw, expected_exposure, exposure_gradient, grad_approx_sw};
