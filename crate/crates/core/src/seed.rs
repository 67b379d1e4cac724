//! Deterministic seed derivation and random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream. A stream is
//! identified by a 64-bit key seed and a 64-bit stream number, so draws for
//! simulation `i` never depend on how many other simulations ran before it
//! or on which thread ran them.
//!
//! Child seeds are derived with a SplitMix64 finalizer chain:
//! `derive(parent, label) = mix(parent ^ mix(label + GOLDEN))`, applied once
//! per hierarchy level. The generator and the chain are part of the
//! reproducibility contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` for the given label.
#[inline]
pub fn derive(parent: u64, label: u64) -> u64 {
    mix(parent ^ mix(label.wrapping_add(GOLDEN)))
}

/// Folds a sequence of labels into `parent`, one [`derive`] per label.
pub fn derive_chain(parent: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(parent, |s, &l| derive(s, l))
}

/// ChaCha8 stream `stream` under key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
