mod common;

use common::{random_doubly_stochastic, rng};
use rand::Rng;
use tumatch_core::{bvn_decompose, sample_ranking, Matrix};

#[test]
fn random_doubly_stochastic_matrices_decompose() {
    let mut r = rng(30);
    for _ in 0..50 {
        let n = r.gen_range(1..=8);
        let terms = r.gen_range(1..=30);
        let m = random_doubly_stochastic(&mut r, n, terms);
        let d = bvn_decompose(&m, 1e-12).unwrap();
        let err = d.reconstruct().max_abs_diff(&m).unwrap();
        assert!(err < 1e-9, "n={n} err={err:e}");
        let bound = (n - 1) * (n - 1) + 1;
        assert!(d.len() <= bound, "n={n}: {} terms > {bound}", d.len());
        let mass: f64 = d.terms().iter().map(|t| t.0).sum();
        assert!((mass - 1.0).abs() < 1e-9);
        assert!(d.terms().iter().all(|t| t.0 > 0.0));
    }
}

#[test]
fn rejects_matrices_that_are_not_doubly_stochastic() {
    let m = Matrix::from_rows(&[[0.7, 0.3], [0.7, 0.3]]).unwrap();
    assert!(bvn_decompose(&m, 1e-12).is_err());
}

#[test]
fn uniform_two_by_two_samples_are_balanced() {
    let m = Matrix::filled(2, 2, 0.5);
    let d = bvn_decompose(&m, 1e-12).unwrap();
    let mut g = rng(31);
    let draws = 10_000;
    let identity = (0..draws).filter(|_| sample_ranking(&d, &mut g) == [0, 1]).count() as f64;
    let sigma = (0.25 / draws as f64).sqrt();
    assert!((identity / draws as f64 - 0.5).abs() < 3.0 * sigma);
}

#[test]
fn sample_frequencies_reconstruct_the_matrix() {
    let mut r = rng(32);
    let m = random_doubly_stochastic(&mut r, 6, 12);
    let d = bvn_decompose(&m, 1e-12).unwrap();
    let draws = 100_000;
    let mut freq = Matrix::zeros(6, 6);
    for _ in 0..draws {
        for (k, &j) in sample_ranking(&d, &mut r).iter().enumerate() {
            freq[(j, k)] += 1.0 / draws as f64;
        }
    }
    assert!(freq.max_abs_diff(&m).unwrap() < 0.01);
}

#[test]
fn permutation_matrix_has_one_term() {
    let m = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
    let d = bvn_decompose(&m, 1e-12).unwrap();
    assert_eq!(d.len(), 1);
    // M(j,k) = 1 means job j sits at position k
    assert_eq!(d.terms()[0].1, vec![2, 0, 1]);
}
