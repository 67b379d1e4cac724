use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "std")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{Matrix, PreferenceMatrices};
use crate::math;
use crate::policy::DeterministicPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuConfig {
    /// Gumbel scale of the preference noise.
    pub beta: f64,
    pub max_iters: usize,
    /// Threshold on both the per-sweep update size and the marginal
    /// constraint violation (infinity norms).
    pub tol: f64,
}

impl Default for TuConfig {
    fn default() -> Self {
        Self { beta: 1.0, max_iters: 100_000, tol: 1e-9 }
    }
}

impl TuConfig {
    pub fn new(beta: f64) -> Self {
        Self { beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// The equilibrium fractional matching and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMatching {
    /// `μ_cj`, `|C| x |J|`.
    pub mu: Matrix,
    /// Candidate outside-option masses `μ_c0`.
    pub mu_c0: Vec<f64>,
    /// Employer outside-option masses `μ_0j`.
    pub mu_0j: Vec<f64>,
    pub beta: f64,
    /// Number of full sweeps performed.
    pub iterations: usize,
    /// Max-abs marginal constraint violation at exit.
    pub residual: f64,
    pub converged: bool,
}

impl EquilibriumMatching {
    /// Checks shapes and positivity of an equilibrium read from elsewhere.
    pub fn validate(&self) -> Result<()> {
        let (nc, nj) = self.mu.shape();
        if self.mu_c0.len() != nc || self.mu_0j.len() != nj {
            return Err(Error::InvalidInput(format!(
                "equilibrium with {nc}x{nj} mu has {} candidate and {} employer outside masses",
                self.mu_c0.len(),
                self.mu_0j.len()
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {}", self.beta)));
        }
        let all = self.mu.as_slice().iter().chain(&self.mu_c0).chain(&self.mu_0j);
        if let Some(bad) = all.into_iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!("equilibrium mass {bad} is not a finite nonnegative number")));
        }
        Ok(())
    }

    pub fn num_candidates(&self) -> usize {
        self.mu.rows()
    }

    pub fn num_jobs(&self) -> usize {
        self.mu.cols()
    }

    /// Max-abs violation of the two marginal constraints
    /// `μ_c0 + Σ_j μ_cj = 1` and `μ_0j + Σ_c μ_cj = 1`.
    pub fn marginal_violation(&self) -> f64 {
        let mut col = self.mu_0j.clone();
        let mut worst: f64 = 0.0;
        for (c, row) in self.mu.iter_rows().enumerate() {
            worst = worst.max((self.mu_c0[c] + row.iter().sum::<f64>() - 1.0).abs());
            for (s, x) in col.iter_mut().zip(row) {
                *s += x;
            }
        }
        col.iter().map(|s| (s - 1.0).abs()).fold(worst, f64::max)
    }
}

/// Positive root of `x² + s·x - 1 = 0`, i.e. `sqrt(1 + (s/2)²) - s/2`,
/// written without the cancellation for large `s`.
#[inline]
fn outside_root(s: f64) -> f64 {
    2.0 / (s + math::sqrt(s * s + 4.0))
}

fn kernel(prefs: &PreferenceMatrices, beta: f64) -> Result<Matrix> {
    let p_jc = prefs.p_jc();
    let scale = 1.0 / (2.0 * beta);
    let k = Matrix::from_fn(prefs.num_candidates(), prefs.num_jobs(), |c, j| {
        math::exp((prefs.p_cj()[(c, j)] + p_jc[(j, c)]) * scale)
    });
    if k.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::KernelOverflow { beta });
    }
    Ok(k)
}

/// `out[r] = root(Σ_i m[r, i] · x[i])`, each sum in ascending index order.
fn half_sweep(m: &Matrix, x: &[f64], out: &mut [f64]) {
    let update = |(r, o): (usize, &mut f64)| {
        let s: f64 = m.row(r).iter().zip(x).map(|(k, b)| k * b).sum();
        *o = outside_root(s);
    };
    #[cfg(feature = "std")]
    out.par_iter_mut().enumerate().for_each(update);
    #[cfg(not(feature = "std"))]
    out.iter_mut().enumerate().for_each(update);
}

/// Max-abs violation of `x_r² + x_r · Σ_i m[r, i] y_i = 1` over rows `r`.
fn side_violation(m: &Matrix, x: &[f64], y: &[f64]) -> f64 {
    m.iter_rows()
        .zip(x)
        .map(|(row, &a)| {
            let s: f64 = row.iter().zip(y).map(|(k, b)| k * b).sum();
            (a * a + a * s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves for the equilibrium matching. Returns with `converged == false`
/// when `max_iters` sweeps were not enough.
pub fn solve_ipfp(prefs: &PreferenceMatrices, config: &TuConfig) -> Result<EquilibriumMatching> {
    solve_ipfp_with(prefs, config, |_, _, _| {})
}

/// Like [`solve_ipfp`], calling `observe(sweep, update_size, residual)`
/// after every sweep.
pub fn solve_ipfp_with(
    prefs: &PreferenceMatrices,
    config: &TuConfig,
    mut observe: impl FnMut(usize, f64, f64),
) -> Result<EquilibriumMatching> {
    config.validate()?;
    let k = kernel(prefs, config.beta)?;
    let kt = k.transpose();
    let (nc, nj) = k.shape();

    let mut a = vec![1.0; nc];
    let mut b = vec![1.0; nj];
    let mut next_a = vec![0.0; nc];
    let mut next_b = vec![0.0; nj];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    while iterations < config.max_iters {
        iterations += 1;
        half_sweep(&k, &b, &mut next_a);
        half_sweep(&kt, &next_a, &mut next_b);

        let delta = a.iter().zip(&next_a).chain(b.iter().zip(&next_b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        core::mem::swap(&mut a, &mut next_a);
        core::mem::swap(&mut b, &mut next_b);

        residual = side_violation(&k, &a, &b).max(side_violation(&kt, &b, &a));
        observe(iterations, delta, residual);
        if delta < config.tol && residual < config.tol {
            converged = true;
            break;
        }
    }

    let mut mu = k;
    for c in 0..nc {
        for (j, m) in mu.row_mut(c).iter_mut().enumerate() {
            *m *= a[c] * b[j];
        }
    }
    Ok(EquilibriumMatching {
        mu,
        mu_c0: a.iter().map(|x| x * x).collect(),
        mu_0j: b.iter().map(|x| x * x).collect(),
        beta: config.beta,
        iterations,
        residual,
        converged,
    })
}

/// Ranks each candidate's jobs by descending `μ_cj`. Refuses an
/// unconverged equilibrium unless `force` is set.
pub fn tu_policy(eq: &EquilibriumMatching, force: bool) -> Result<DeterministicPolicy> {
    if !eq.converged && !force {
        return Err(Error::NotConverged { iterations: eq.iterations, residual: eq.residual });
    }
    Ok(DeterministicPolicy::from_scores(&eq.mu))
}

/// Equilibrium transfers `τ_cj = β ln(μ_cj / μ_c0) - p_cj` implied by the
/// candidates' logit demand.
pub fn recover_transfers(prefs: &PreferenceMatrices, eq: &EquilibriumMatching) -> Result<Matrix> {
    if !eq.converged {
        return Err(Error::NotConverged { iterations: eq.iterations, residual: eq.residual });
    }
    if eq.mu.shape() != prefs.p_cj().shape() {
        return Err(Error::Shape { expected: prefs.p_cj().shape(), found: eq.mu.shape() });
    }
    if eq.mu_c0.iter().chain(eq.mu.as_slice()).any(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateEquilibrium);
    }
    Ok(Matrix::from_fn(eq.num_candidates(), eq.num_jobs(), |c, j| {
        eq.beta * math::ln(eq.mu[(c, j)] / eq.mu_c0[c]) - prefs.p_cj()[(c, j)]
    }))
}

/// Candidates' logit demand under transfers `τ`: returns `(μ_cj, μ_c0)` with
/// `μ_cj ∝ exp((p_cj + τ_cj) / β)` and the outside option at utility zero.
pub fn candidate_demand(prefs: &PreferenceMatrices, transfers: &Matrix, beta: f64) -> (Matrix, Vec<f64>) {
    let (nc, nj) = prefs.p_cj().shape();
    let mut mu = Matrix::zeros(nc, nj);
    let mut outside = vec![0.0; nc];
    for c in 0..nc {
        let row = mu.row_mut(c);
        for (j, m) in row.iter_mut().enumerate() {
            *m = math::exp((prefs.p_cj()[(c, j)] + transfers[(c, j)]) / beta);
        }
        let z = 1.0 + row.iter().sum::<f64>();
        row.iter_mut().for_each(|m| *m /= z);
        outside[c] = 1.0 / z;
    }
    (mu, outside)
}

/// Employers' logit demand under transfers `τ`: returns `(μ_cj, μ_0j)` with
/// `μ_cj ∝ exp((p_jc - τ_cj) / β)` normalised over candidates and the
/// outside option.
pub fn employer_demand(prefs: &PreferenceMatrices, transfers: &Matrix, beta: f64) -> (Matrix, Vec<f64>) {
    let (nc, nj) = prefs.p_cj().shape();
    let mut mu = Matrix::zeros(nc, nj);
    let mut outside = vec![0.0; nj];
    for j in 0..nj {
        let mut z = 1.0;
        for c in 0..nc {
            let w = math::exp((prefs.p_jc()[(j, c)] - transfers[(c, j)]) / beta);
            mu[(c, j)] = w;
            z += w;
        }
        for c in 0..nc {
            mu[(c, j)] /= z;
        }
        outside[j] = 1.0 / z;
    }
    (mu, outside)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> PreferenceMatrices {
        PreferenceMatrices::from_rows(&[[0.9, 0.1], [0.2, 0.8]], &[[0.3, 0.6], [0.7, 0.4]]).unwrap()
    }

    #[test]
    fn one_by_one_zero_market() {
        let m = PreferenceMatrices::from_rows(&[[0.0]], &[[0.0]]).unwrap();
        for beta in [0.1, 1.0, 7.0] {
            let cfg = TuConfig { beta, tol: 1e-14, ..TuConfig::default() };
            let eq = solve_ipfp(&m, &cfg).unwrap();
            assert!(eq.converged);
            assert!((eq.mu[(0, 0)] - 0.5).abs() < 1e-12);
            assert!((eq.mu_c0[0].sqrt() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            assert!((eq.mu_0j[0].sqrt() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_root_solves_quadratic() {
        for s in [0.0, 1e-8, 0.3, 1.0, 17.0, 1e6] {
            let x = outside_root(s);
            let literal = (1.0 + (s / 2.0) * (s / 2.0)).sqrt() - s / 2.0;
            assert!(x > 0.0);
            assert!((x * x + s * x - 1.0).abs() < 1e-12);
            if s < 100.0 {
                assert!((x - literal).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fixed_point_satisfies_marginals() {
        let eq = solve_ipfp(&two_by_two(), &TuConfig::new(1.0)).unwrap();
        assert!(eq.converged);
        assert!(eq.residual < 1e-9);
        assert!(eq.marginal_violation() < 1e-9);
        assert!(eq.mu.as_slice().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn unconverged_is_flagged_not_hidden() {
        let cfg = TuConfig { beta: 1.0, max_iters: 1, tol: 1e-9 };
        let eq = solve_ipfp(&two_by_two(), &cfg).unwrap();
        assert!(!eq.converged);
        assert_eq!(eq.iterations, 1);
        assert!(matches!(tu_policy(&eq, false), Err(Error::NotConverged { .. })));
        assert!(tu_policy(&eq, true).is_ok());
        assert!(recover_transfers(&two_by_two(), &eq).is_err());
    }

    #[test]
    fn kernel_overflow_is_reported() {
        let m = PreferenceMatrices::from_rows(&[[1.0]], &[[1.0]]).unwrap();
        let err = solve_ipfp(&m, &TuConfig::new(1e-3)).unwrap_err();
        assert_eq!(err, Error::KernelOverflow { beta: 1e-3 });
    }

    #[test]
    fn rejects_bad_config() {
        let m = two_by_two();
        assert!(solve_ipfp(&m, &TuConfig::new(0.0)).is_err());
        assert!(solve_ipfp(&m, &TuConfig { max_iters: 0, ..TuConfig::default() }).is_err());
        assert!(solve_ipfp(&m, &TuConfig { tol: -1.0, ..TuConfig::default() }).is_err());
    }

    #[test]
    fn zero_market_transfer_is_zero() {
        let m = PreferenceMatrices::from_rows(&[[0.0]], &[[0.0]]).unwrap();
        let eq = solve_ipfp(&m, &TuConfig { tol: 1e-14, ..TuConfig::default() }).unwrap();
        let tau = recover_transfers(&m, &eq).unwrap();
        assert!(tau[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn tu_ranking_sorts_mu() {
        let eq = EquilibriumMatching {
            mu: Matrix::from_rows(&[[0.1, 0.3, 0.2]]).unwrap(),
            mu_c0: vec![0.4],
            mu_0j: vec![0.5, 0.5, 0.5],
            beta: 1.0,
            iterations: 1,
            residual: 0.0,
            converged: true,
        };
        assert_eq!(tu_policy(&eq, false).unwrap().ranking(0), &[1, 2, 0]);
    }
}
