#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tumatch_core::seed::stream_rng;
use tumatch_core::{Matrix, PreferenceMatrices, StochasticPolicy};

pub fn rng(stream: u64) -> ChaCha8Rng {
    stream_rng(0xC0FFEE, stream)
}

pub fn random_market(rng: &mut impl Rng, nc: usize, nj: usize) -> PreferenceMatrices {
    let p_cj = Matrix::from_fn(nc, nj, |_, _| rng.gen());
    let p_jc = Matrix::from_fn(nj, nc, |_, _| rng.gen());
    PreferenceMatrices::new(p_cj, p_jc).unwrap()
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Random convex combination of `terms` random permutation matrices.
pub fn random_doubly_stochastic(rng: &mut impl Rng, n: usize, terms: usize) -> Matrix {
    let weights: Vec<f64> = (0..terms).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut m = Matrix::zeros(n, n);
    for w in weights {
        let p = random_permutation(rng, n);
        for (k, &j) in p.iter().enumerate() {
            m[(j, k)] += w / total;
        }
    }
    m
}

pub fn random_stochastic_policy(rng: &mut impl Rng, nc: usize, nj: usize) -> StochasticPolicy {
    let ms = (0..nc).map(|_| random_doubly_stochastic(rng, nj, 4)).collect();
    StochasticPolicy::new(ms).unwrap()
}

pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
