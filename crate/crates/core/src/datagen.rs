//! Synthetic markets with tunable crowding.
//!
//! Each score mixes a shared popularity term with an idiosyncratic uniform
//! draw: `p_cj = λ·pop_j + (1-λ)·u_cj` and `p_jc = λ·pop_c + (1-λ)·u_jc`,
//! where popularity falls linearly from 1 (index 0) to 0 (last index).

use alloc::format;

use rand::Rng;

use crate::error::{Error, Result};
use crate::market::{Matrix, PreferenceMatrices};
use crate::seed::stream_rng;

/// Stream numbers for the two idiosyncratic draws under the market seed.
const CANDIDATE_STREAM: u64 = 0;
const EMPLOYER_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    /// Number of employers; the market has `round(1.5 n)` candidates.
    pub n: usize,
    /// Crowding weight on shared popularity.
    pub lambda: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n: usize, lambda: f64, seed: u64) -> Result<Self> {
        let cfg = Self { n, lambda, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }

    pub fn num_jobs(&self) -> usize {
        self.n
    }

    /// `1.5 n` rounded half up.
    pub fn num_candidates(&self) -> usize {
        (3 * self.n).div_ceil(2)
    }
}

/// Popularity of the 0-based index `k` among `len` users.
fn popularity(k: usize, len: usize) -> f64 {
    if len == 1 {
        1.0
    } else {
        1.0 - k as f64 / (len - 1) as f64
    }
}

pub fn generate_market(config: &SyntheticConfig) -> Result<PreferenceMatrices> {
    config.validate()?;
    let (nc, nj) = (config.num_candidates(), config.num_jobs());
    let lambda = config.lambda;
    let mix = |pop: f64, u: f64| (lambda * pop + (1.0 - lambda) * u).clamp(0.0, 1.0);

    let mut rng = stream_rng(config.seed, CANDIDATE_STREAM);
    let p_cj = Matrix::from_fn(nc, nj, |_, j| mix(popularity(j, nj), rng.gen::<f64>()));
    let mut rng = stream_rng(config.seed, EMPLOYER_STREAM);
    let p_jc = Matrix::from_fn(nj, nc, |_, c| mix(popularity(c, nc), rng.gen::<f64>()));
    PreferenceMatrices::new(p_cj, p_jc)
}
