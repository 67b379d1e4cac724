mod common;

use common::rng;
use rand::Rng;
use tumatch_core::{build_embeddings, solve_ipfp, top_k_by_dot, tu_policy, Matrix, PreferenceMatrices, TuConfig};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Features {
    phi1: Matrix,
    phi2: Matrix,
    psi1: Matrix,
    psi2: Matrix,
}

fn low_rank_market(r: &mut impl Rng, nc: usize, nj: usize, d: usize) -> (PreferenceMatrices, Features) {
    let mut unit = |rows: usize, scale: f64| Matrix::from_fn(rows, d, |_, _| r.gen::<f64>() * scale);
    let f = Features {
        phi1: unit(nc, 1.0),
        phi2: unit(nc, 1.0),
        psi1: unit(nj, 1.0 / d as f64),
        psi2: unit(nj, 1.0 / d as f64),
    };
    let p_cj = Matrix::from_fn(nc, nj, |c, j| dot(f.phi1.row(c), f.psi1.row(j)));
    let p_jc = Matrix::from_fn(nj, nc, |j, c| dot(f.phi2.row(c), f.psi2.row(j)));
    (PreferenceMatrices::new(p_cj, p_jc).unwrap(), f)
}

#[test]
fn inner_products_equal_twice_beta_log_mu() {
    let mut r = rng(40);
    for beta in [0.3, 1.0, 4.0] {
        let (prefs, f) = low_rank_market(&mut r, 15, 11, 3);
        let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
        let emb = build_embeddings(&f.phi1, &f.phi2, &f.psi1, &f.psi2, &eq).unwrap();
        assert_eq!(emb.dim, 8);
        assert!(emb.max_feature_deviation < 1e-9);
        for c in 0..15 {
            for j in 0..11 {
                let want = 2.0 * beta * eq.mu[(c, j)].ln();
                assert!((emb.score(c, j) - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn top_k_matches_equilibrium_ranking() {
    let mut r = rng(41);
    for inst in 0..20 {
        let nc = r.gen_range(2..25);
        let nj = r.gen_range(2..25);
        let d = r.gen_range(1..5);
        let (prefs, f) = low_rank_market(&mut r, nc, nj, d);
        let beta = [0.5, 1.0, 2.0][inst % 3];
        let eq = solve_ipfp(&prefs, &TuConfig::new(beta)).unwrap();
        let emb = build_embeddings(&f.phi1, &f.phi2, &f.psi1, &f.psi2, &eq).unwrap();
        let policy = tu_policy(&eq, false).unwrap();
        for c in 0..nc {
            for k in [1, nj.min(3), nj] {
                let got = top_k_by_dot(&emb, c, k).unwrap();
                assert_eq!(got.as_slice(), &policy.ranking(c)[..k], "instance {inst} candidate {c} k {k}");
            }
        }
    }
}

#[test]
fn mismatched_features_are_flagged() {
    let mut r = rng(42);
    let (prefs, f) = low_rank_market(&mut r, 6, 5, 2);
    let eq = solve_ipfp(&prefs, &TuConfig::new(1.0)).unwrap();
    let other = Matrix::from_fn(6, 2, |_, _| r.gen::<f64>());
    let emb = build_embeddings(&other, &f.phi2, &f.psi1, &f.psi2, &eq).unwrap();
    assert!(emb.max_feature_deviation > 1e-6);
    assert!(build_embeddings(&f.psi1, &f.phi2, &f.psi1, &f.psi2, &eq).is_err());
    assert!(top_k_by_dot(&emb, 0, 0).is_err());
    assert!(top_k_by_dot(&emb, 0, 6).is_err());
}
