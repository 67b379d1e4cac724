use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "std")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::examination::ExaminationFunction;
use crate::market::{Matrix, PreferenceMatrices};
use crate::policy::{argsort_desc, StochasticPolicy};
use crate::sw::assignment;
use crate::sw::objective::{approx_sw_with, exposure_gradient_with, exposure_matrix, strict_groups};

/// How the per-candidate linear minimisation step is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LmoSolver {
    /// Dense Hungarian assignment on the cost `-G_cj · v(k)`.
    Hungarian,
    /// Sort jobs by `G_cj` and place them in rank order. The cost is rank
    /// one with a non-increasing `v`, so this attains the same minimum as
    /// the assignment solve (rearrangement inequality) in `O(n log n)`.
    #[default]
    Sorted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwConfig {
    pub timesteps: usize,
    /// Constant step size.
    pub learning_rate: f64,
    /// Examination curve assumed by the objective; it need not match the
    /// one used to evaluate the policy.
    pub examination: ExaminationFunction,
    pub lmo: LmoSolver,
}

impl SwConfig {
    pub fn new(examination: ExaminationFunction) -> Self {
        Self { timesteps: 50, learning_rate: 0.2, examination, lmo: LmoSolver::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(Error::InvalidInput("timesteps must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidInput(format!("learning rate {} outside (0, 1]", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwSolution {
    pub policy: StochasticPolicy,
    /// Lower-bound objective at the initial point and after every step.
    pub objective: Vec<f64>,
    /// Worst row/column-sum error over all iterates.
    pub max_marginal_error: f64,
}

/// Vertex of the Birkhoff polytope minimising `-<G_c ⊗ v, S>`, as a ranking
/// (`ranking[k]` = job at position `k`).
pub(crate) fn lmo_vertex(grad_row: &[f64], vk: &[f64], solver: LmoSolver) -> Result<Vec<usize>> {
    match solver {
        LmoSolver::Sorted => Ok(argsort_desc(grad_row)),
        LmoSolver::Hungarian => {
            let n = grad_row.len();
            let cost = Matrix::from_fn(n, n, |j, k| -grad_row[j] * vk[k]);
            let pos = assignment::solve(&cost)?;
            let mut ranking = alloc::vec![0; n];
            for (j, &k) in pos.iter().enumerate() {
                ranking[k] = j;
            }
            Ok(ranking)
        }
    }
}

fn blend(m: &mut Matrix, ranking: &[usize], eta: f64) {
    m.as_mut_slice().iter_mut().for_each(|x| *x *= 1.0 - eta);
    for (k, &j) in ranking.iter().enumerate() {
        m[(j, k)] += eta;
    }
}

pub fn solve_sw(prefs: &PreferenceMatrices, config: &SwConfig) -> Result<StochasticPolicy> {
    solve_sw_traced(prefs, config, |_, _| {}).map(|s| s.policy)
}

/// Frank–Wolfe from the uniform policy, calling `observe(step, objective)`
/// for the initial point (step 0) and after each step.
pub fn solve_sw_traced(
    prefs: &PreferenceMatrices,
    config: &SwConfig,
    mut observe: impl FnMut(usize, f64),
) -> Result<SwSolution> {
    config.validate()?;
    let v = &config.examination;
    v.derivative_unchecked(1.0)?;
    let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());
    let vk = v.rank_values(nj);
    let groups = strict_groups(prefs);
    let eta = config.learning_rate;

    let mut policy = StochasticPolicy::uniform(nc, nj);
    let mut objective = Vec::with_capacity(config.timesteps + 1);
    let mut max_marginal_error = policy.max_marginal_error();
    let first = approx_sw_with(&policy, prefs, v, &vk, &groups);
    observe(0, first);
    objective.push(first);

    for step in 1..=config.timesteps {
        let e = exposure_matrix(&policy, &vk);
        let g = exposure_gradient_with(prefs, v, &e, &groups)?;
        let mut matrices = core::mem::take(&mut policy).into_matrices();
        let update = |(c, m): (usize, &mut Matrix)| -> Result<()> {
            let ranking = lmo_vertex(g.row(c), &vk, config.lmo)?;
            blend(m, &ranking, eta);
            Ok(())
        };
        #[cfg(feature = "std")]
        matrices.par_iter_mut().enumerate().try_for_each(update)?;
        #[cfg(not(feature = "std"))]
        matrices.iter_mut().enumerate().try_for_each(update)?;
        policy = StochasticPolicy::new_unchecked(matrices);

        max_marginal_error = max_marginal_error.max(policy.max_marginal_error());
        let value = approx_sw_with(&policy, prefs, v, &vk, &groups);
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("objective became non-finite at step {step}")));
        }
        observe(step, value);
        objective.push(value);
    }
    Ok(SwSolution { policy, objective, max_marginal_error })
}
