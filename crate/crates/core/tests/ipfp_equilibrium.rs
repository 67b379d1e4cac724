mod common;

use common::{random_market, rng};
use rand::Rng;
use tumatch_core::tu::{candidate_demand, employer_demand, solve_ipfp_with};
use tumatch_core::{argsort_desc, recover_transfers, solve_ipfp, tu_policy, Matrix, PreferenceMatrices, TuConfig};

/// Newton's method on F(A, B) = 0 for the row and column quadratics, with a
/// dense Jacobian and Gaussian elimination. Independent of the IPFP sweep.
fn newton_solve(prefs: &PreferenceMatrices, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());
    let k = |c: usize, j: usize| ((prefs.p_cj()[(c, j)] + prefs.p_jc()[(j, c)]) / (2.0 * beta)).exp();
    let n = nc + nj;
    let mut x = vec![0.5; n];
    for _ in 0..100 {
        let mut f = vec![0.0; n];
        let mut jac = vec![vec![0.0; n]; n];
        for c in 0..nc {
            let s: f64 = (0..nj).map(|j| k(c, j) * x[nc + j]).sum();
            f[c] = x[c] * x[c] + x[c] * s - 1.0;
            jac[c][c] = 2.0 * x[c] + s;
            for j in 0..nj {
                jac[c][nc + j] = x[c] * k(c, j);
            }
        }
        for j in 0..nj {
            let s: f64 = (0..nc).map(|c| k(c, j) * x[c]).sum();
            f[nc + j] = x[nc + j] * x[nc + j] + x[nc + j] * s - 1.0;
            jac[nc + j][nc + j] = 2.0 * x[nc + j] + s;
            for c in 0..nc {
                jac[nc + j][c] = x[nc + j] * k(c, j);
            }
        }
        // solve jac * dx = f
        let mut a = jac;
        let mut b = f.clone();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in (col + 1)..n {
                let factor = a[r][col] / a[col][col];
                for cc in col..n {
                    a[r][cc] -= factor * a[col][cc];
                }
                b[r] -= factor * b[col];
            }
        }
        let mut dx = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = ((r + 1)..n).map(|cc| a[r][cc] * dx[cc]).sum();
            dx[r] = (b[r] - s) / a[r][r];
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        if f.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
    }
    (x[..nc].to_vec(), x[nc..].to_vec())
}

#[test]
fn two_by_two_matches_newton_oracle() {
    let prefs = PreferenceMatrices::from_rows(&[[0.9, 0.1], [0.2, 0.8]], &[[0.3, 0.6], [0.7, 0.4]]).unwrap();
    let eq = solve_ipfp(&prefs, &TuConfig::new(1.0)).unwrap();
    assert!(eq.converged);
    assert!(eq.residual < 1e-9);
    let (a, b) = newton_solve(&prefs, 1.0);
    for c in 0..2 {
        assert!((eq.mu_c0[c] - a[c] * a[c]).abs() < 1e-9);
        for j in 0..2 {
            let k = ((prefs.p_cj()[(c, j)] + prefs.p_jc()[(j, c)]) / 2.0).exp();
            assert!((eq.mu[(c, j)] - k * a[c] * b[j]).abs() < 1e-9);
        }
    }
    for j in 0..2 {
        assert!((eq.mu_0j[j] - b[j] * b[j]).abs() < 1e-9);
    }
}

#[test]
fn rectangular_markets_match_newton_oracle() {
    let mut r = rng(1);
    for (nc, nj) in [(3, 2), (4, 6), (7, 5)] {
        let prefs = random_market(&mut r, nc, nj);
        for beta in [0.2, 1.0, 3.0] {
            let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
            let (a, _) = newton_solve(&prefs, beta);
            for c in 0..nc {
                assert!((eq.mu_c0[c] - a[c] * a[c]).abs() < 1e-8, "{nc}x{nj} beta {beta}");
            }
        }
    }
}

#[test]
fn fifty_random_markets_reach_equilibrium() {
    let mut r = rng(2);
    let mut worst_residual: f64 = 0.0;
    let mut worst_demand: f64 = 0.0;
    for _ in 0..50 {
        let nc = r.gen_range(1..=20);
        let nj = r.gen_range(1..=30);
        let beta = [0.25, 0.5, 1.0, 2.0][r.gen_range(0..4)];
        let prefs = random_market(&mut r, nc, nj);
        let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
        assert!(eq.converged);
        assert!(eq.residual < 1e-9);
        assert!(eq.marginal_violation() < 1e-9);
        assert!(eq.mu.as_slice().iter().chain(&eq.mu_c0).chain(&eq.mu_0j).all(|&x| x > 0.0));

        let tau = recover_transfers(&prefs, &eq).unwrap();
        let (cand, cand_out) = candidate_demand(&prefs, &tau, beta);
        let (emp, _) = employer_demand(&prefs, &tau, beta);
        for c in 0..nc {
            assert!((cand_out[c] - eq.mu_c0[c]).abs() < 1e-7);
            for j in 0..nj {
                worst_demand =
                    worst_demand.max((cand[(c, j)] - eq.mu[(c, j)]).abs()).max((emp[(c, j)] - eq.mu[(c, j)]).abs());
            }
        }
        worst_residual = worst_residual.max(eq.residual);
    }
    assert!(worst_demand < 1e-7, "demand mismatch {worst_demand:e}");
    assert!(worst_residual < 1e-9);
}

#[test]
fn mu_is_kernel_times_outside_roots() {
    let mut r = rng(3);
    let prefs = random_market(&mut r, 6, 4);
    let beta = 0.7;
    let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
    for c in 0..6 {
        for j in 0..4 {
            let k = ((prefs.p_cj()[(c, j)] + prefs.p_jc()[(j, c)]) / (2.0 * beta)).exp();
            let expect = k * eq.mu_c0[c].sqrt() * eq.mu_0j[j].sqrt();
            assert!((eq.mu[(c, j)] - expect).abs() < 1e-15 * expect.max(1.0) * 8.0);
        }
    }
}

#[test]
fn ranking_follows_kernel_plus_employer_outside_mass() {
    let mut r = rng(4);
    let prefs = random_market(&mut r, 8, 9);
    for beta in [0.5, 5.0, 50.0, 500.0] {
        let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
        let policy = tu_policy(&eq, false).unwrap();
        for c in 0..8 {
            let score: Vec<f64> =
                (0..9).map(|j| prefs.p_cj()[(c, j)] + prefs.p_jc()[(j, c)] + beta * eq.mu_0j[j].ln()).collect();
            assert_eq!(policy.ranking(c), argsort_desc(&score).as_slice(), "beta {beta}");
        }
    }
}

#[test]
fn residual_is_non_increasing_across_sweeps() {
    let mut r = rng(5);
    for _ in 0..10 {
        let prefs = random_market(&mut r, 12, 9);
        let mut trace = Vec::new();
        let cfg = TuConfig::new(1.0);
        solve_ipfp_with(&prefs, &cfg, |_, _, res| trace.push(res)).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "residual rose: {:?}", w);
        }
    }
}

#[test]
fn transfers_recover_zero_for_symmetric_market() {
    let prefs = PreferenceMatrices::new(Matrix::filled(1, 1, 0.0), Matrix::filled(1, 1, 0.0)).unwrap();
    let eq = solve_ipfp(&prefs, &TuConfig { tol: 1e-14, ..TuConfig::default() }).unwrap();
    assert!((eq.mu[(0, 0)] - 0.5).abs() < 1e-12);
    let tau = recover_transfers(&prefs, &eq).unwrap();
    assert!(tau[(0, 0)].abs() < 1e-12);
    assert_eq!(tu_policy(&eq, false).unwrap().ranking(0), &[0]);
}
