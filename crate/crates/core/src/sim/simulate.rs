//! Monte-Carlo simulation of one market round.
//!
//! Stage 1: candidate `c` applies to the job at 1-based position `k` of its
//! list with probability `v(k) · p_cj`, independently across jobs.
//! Stage 2: employer `j` walks its applicants in descending `p_jc` order
//! (ties by ascending candidate index) and matches the `r`-th one with
//! probability `v(r) · p_jc`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "std")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::examination::ExaminationFunction;
use crate::market::{Matrix, PreferenceMatrices};
use crate::policy::{argsort_desc, DeterministicPolicy};
use crate::seed::stream_rng;
use crate::sw::{sample_ranking, BvnDecomposition};

/// Where each candidate's ranked list comes from in a simulated round.
#[derive(Debug, Clone, Copy)]
pub enum RankingSource<'a> {
    Fixed(&'a DeterministicPolicy),
    /// One ranking per candidate drawn from its decomposition every round.
    Sampled(&'a [BvnDecomposition]),
}

impl RankingSource<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            Self::Fixed(p) => (p.num_candidates(), p.num_jobs()),
            Self::Sampled(d) => (d.len(), d.first().map_or(0, BvnDecomposition::size)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketOutcome {
    pub total_matches: u64,
    pub candidate_matches: Vec<u32>,
    pub employer_matches: Vec<u32>,
}

impl MarketOutcome {
    fn new(nc: usize, nj: usize) -> Self {
        Self { total_matches: 0, candidate_matches: vec![0; nc], employer_matches: vec![0; nj] }
    }

    fn clear(&mut self) {
        self.total_matches = 0;
        self.candidate_matches.iter_mut().for_each(|x| *x = 0);
        self.employer_matches.iter_mut().for_each(|x| *x = 0);
    }
}

/// Monte-Carlo welfare estimate plus per-user mean match counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SwEstimate {
    pub mean: f64,
    /// Sample standard deviation of the total over `sqrt(n_sims)`.
    pub stderr: f64,
    pub n_sims: usize,
    pub seed: u64,
    pub candidate_mean_matches: Vec<f64>,
    pub employer_mean_matches: Vec<f64>,
}

impl SwEstimate {
    pub fn gini_candidates(&self) -> f64 {
        crate::sim::gini(&self.candidate_mean_matches)
    }

    pub fn gini_employers(&self) -> f64 {
        crate::sim::gini(&self.employer_mean_matches)
    }
}

/// Precomputed state for repeated rounds on one market and policy.
pub struct MarketSimulator<'a> {
    prefs: &'a PreferenceMatrices,
    source: RankingSource<'a>,
    /// `v(1), v(2), ...` long enough for either side's ranks.
    vk: Vec<f64>,
    /// Per employer, candidates by descending `p_jc`.
    employer_order: Vec<Vec<usize>>,
    /// Application probabilities for a fixed policy, `|C| x |J|`.
    fixed_apply: Option<Matrix>,
}

impl<'a> MarketSimulator<'a> {
    pub fn new(source: RankingSource<'a>, prefs: &'a PreferenceMatrices, v: &ExaminationFunction) -> Result<Self> {
        let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());
        if source.shape() != (nc, nj) {
            return Err(Error::InvalidInput(format!(
                "policy covers {}x{} but the market is {nc}x{nj}",
                source.shape().0,
                source.shape().1
            )));
        }
        let vk = v.rank_values(nc.max(nj));
        let employer_order = prefs.p_jc().iter_rows().map(argsort_desc).collect();
        let fixed_apply = match source {
            RankingSource::Fixed(policy) => {
                let mut q = Matrix::zeros(nc, nj);
                for (c, ranking) in policy.rankings().iter().enumerate() {
                    for (k, &j) in ranking.iter().enumerate() {
                        q[(c, j)] = vk[k] * prefs.p_cj()[(c, j)];
                    }
                }
                Some(q)
            }
            RankingSource::Sampled(_) => None,
        };
        Ok(Self { prefs, source, vk, employer_order, fixed_apply })
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> MarketOutcome {
        let (nc, nj) = (self.prefs.num_candidates(), self.prefs.num_jobs());
        let mut applied = vec![false; nc * nj];
        let mut out = MarketOutcome::new(nc, nj);
        self.run_into(rng, &mut applied, &mut out);
        out
    }

    /// One round, reusing caller buffers. `applied` is employer-major
    /// (`j * |C| + c`) and is overwritten.
    fn run_into<R: Rng + ?Sized>(&self, rng: &mut R, applied: &mut [bool], out: &mut MarketOutcome) {
        let nc = self.prefs.num_candidates();
        let p_cj = self.prefs.p_cj();
        let p_jc = self.prefs.p_jc();
        applied.iter_mut().for_each(|a| *a = false);
        out.clear();

        match (&self.source, &self.fixed_apply) {
            (RankingSource::Fixed(_), Some(q)) => {
                for (c, row) in q.iter_rows().enumerate() {
                    for (j, &prob) in row.iter().enumerate() {
                        if prob > 0.0 && rng.gen::<f64>() < prob {
                            applied[j * nc + c] = true;
                        }
                    }
                }
            }
            (RankingSource::Sampled(decomps), _) => {
                for (c, d) in decomps.iter().enumerate() {
                    let ranking = sample_ranking(d, rng);
                    for (k, &j) in ranking.iter().enumerate() {
                        let prob = self.vk[k] * p_cj[(c, j)];
                        if prob > 0.0 && rng.gen::<f64>() < prob {
                            applied[j * nc + c] = true;
                        }
                    }
                }
            }
            (RankingSource::Fixed(_), None) => unreachable!("fixed policies precompute probabilities"),
        }

        for (j, order) in self.employer_order.iter().enumerate() {
            let applicants = &applied[j * nc..(j + 1) * nc];
            let mut rank = 0;
            for &c in order {
                if !applicants[c] {
                    continue;
                }
                let prob = self.vk[rank] * p_jc[(j, c)];
                rank += 1;
                if prob > 0.0 && rng.gen::<f64>() < prob {
                    out.total_matches += 1;
                    out.candidate_matches[c] += 1;
                    out.employer_matches[j] += 1;
                }
            }
        }
    }
}

/// One simulated market round.
pub fn simulate_once<R: Rng + ?Sized>(
    source: RankingSource<'_>,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
    rng: &mut R,
) -> Result<MarketOutcome> {
    Ok(MarketSimulator::new(source, prefs, v)?.run(rng))
}

struct Accumulator {
    sum: u64,
    sum_sq: u128,
    candidates: Vec<u64>,
    employers: Vec<u64>,
}

impl Accumulator {
    fn new(nc: usize, nj: usize) -> Self {
        Self { sum: 0, sum_sq: 0, candidates: vec![0; nc], employers: vec![0; nj] }
    }

    fn add(&mut self, o: &MarketOutcome) {
        self.sum += o.total_matches;
        self.sum_sq += u128::from(o.total_matches) * u128::from(o.total_matches);
        for (a, &x) in self.candidates.iter_mut().zip(&o.candidate_matches) {
            *a += u64::from(x);
        }
        for (a, &x) in self.employers.iter_mut().zip(&o.employer_matches) {
            *a += u64::from(x);
        }
    }

    #[cfg_attr(not(feature = "std"), allow(dead_code))]
    fn merge(mut self, other: Self) -> Self {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        for (a, b) in self.candidates.iter_mut().zip(other.candidates) {
            *a += b;
        }
        for (a, b) in self.employers.iter_mut().zip(other.employers) {
            *a += b;
        }
        self
    }
}

/// Mean and standard error of the total number of matches over `n_sims`
/// rounds. Round `i` draws from ChaCha8 stream `i` under `seed`; all
/// aggregation is in exact integer arithmetic, so the result does not depend
/// on thread count or scheduling.
pub fn estimate_sw(
    source: RankingSource<'_>,
    prefs: &PreferenceMatrices,
    v: &ExaminationFunction,
    n_sims: usize,
    seed: u64,
) -> Result<SwEstimate> {
    if n_sims == 0 {
        return Err(Error::InvalidInput("n_sims must be at least 1".into()));
    }
    let sim = MarketSimulator::new(source, prefs, v)?;
    let (nc, nj) = (prefs.num_candidates(), prefs.num_jobs());

    let run = |i: u64, acc: &mut Accumulator, applied: &mut [bool], out: &mut MarketOutcome| {
        let mut rng = stream_rng(seed, i);
        sim.run_into(&mut rng, applied, out);
        acc.add(out);
    };

    #[cfg(feature = "std")]
    let acc = (0..n_sims as u64)
        .into_par_iter()
        .fold(
            || (Accumulator::new(nc, nj), vec![false; nc * nj], MarketOutcome::new(nc, nj)),
            |(mut acc, mut applied, mut out), i| {
                run(i, &mut acc, &mut applied, &mut out);
                (acc, applied, out)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(|| Accumulator::new(nc, nj), Accumulator::merge);

    #[cfg(not(feature = "std"))]
    let acc = {
        let mut acc = Accumulator::new(nc, nj);
        let mut applied = vec![false; nc * nj];
        let mut out = MarketOutcome::new(nc, nj);
        for i in 0..n_sims as u64 {
            run(i, &mut acc, &mut applied, &mut out);
        }
        acc
    };

    let n = n_sims as f64;
    let mean = acc.sum as f64 / n;
    let stderr = if n_sims > 1 {
        // Σ(x - mean)² = Σx² - (Σx)²/n, formed exactly before rounding.
        let s = u128::from(acc.sum);
        let centered = (acc.sum_sq * n_sims as u128 - s * s) as f64 / n;
        crate::math::sqrt(centered / (n - 1.0)) / crate::math::sqrt(n)
    } else {
        0.0
    };
    Ok(SwEstimate {
        mean,
        stderr,
        n_sims,
        seed,
        candidate_mean_matches: acc.candidates.iter().map(|&x| x as f64 / n).collect(),
        employer_mean_matches: acc.employers.iter().map(|&x| x as f64 / n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::naive_policy;

    #[test]
    fn zero_preferences_never_match() {
        let prefs = PreferenceMatrices::new(Matrix::zeros(3, 2), Matrix::zeros(2, 3)).unwrap();
        let policy = naive_policy(&prefs);
        let est = estimate_sw(RankingSource::Fixed(&policy), &prefs, &ExaminationFunction::Inv, 200, 3).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn certain_single_match() {
        let prefs = PreferenceMatrices::from_rows(&[[1.0]], &[[1.0]]).unwrap();
        let policy = naive_policy(&prefs);
        for v in [ExaminationFunction::Inv, ExaminationFunction::Log, ExaminationFunction::Exp] {
            let mut rng = stream_rng(0, 0);
            for _ in 0..50 {
                let o = simulate_once(RankingSource::Fixed(&policy), &prefs, &v, &mut rng).unwrap();
                assert_eq!(o.total_matches, 1);
            }
        }
    }

    #[test]
    fn outcome_accounting() {
        let prefs = crate::datagen::generate_market(&crate::datagen::SyntheticConfig::new(6, 0.5, 2).unwrap()).unwrap();
        let policy = naive_policy(&prefs);
        let sim = MarketSimulator::new(RankingSource::Fixed(&policy), &prefs, &ExaminationFunction::Inv).unwrap();
        let mut rng = stream_rng(9, 0);
        for _ in 0..100 {
            let o = sim.run(&mut rng);
            let c: u64 = o.candidate_matches.iter().map(|&x| u64::from(x)).sum();
            let e: u64 = o.employer_matches.iter().map(|&x| u64::from(x)).sum();
            assert_eq!(o.total_matches, c);
            assert_eq!(o.total_matches, e);
        }
    }

    #[test]
    fn policy_shape_must_match_market() {
        let prefs = PreferenceMatrices::from_rows(&[[1.0, 0.5]], &[[1.0], [0.5]]).unwrap();
        let policy = DeterministicPolicy::new(vec![vec![0]]).unwrap();
        assert!(MarketSimulator::new(RankingSource::Fixed(&policy), &prefs, &ExaminationFunction::Inv).is_err());
        let p = naive_policy(&prefs);
        assert!(estimate_sw(RankingSource::Fixed(&p), &prefs, &ExaminationFunction::Inv, 0, 0).is_err());
    }
}
