//! Counter-based seed derivation.
//!
//! All randomness in this crate flows from a single user-visible `u64` seed.
//! Independent streams (replications, null-distribution draws, parallel
//! workers) derive their own seeds through a SplitMix64 chain keyed by integer
//! labels, so parallel and serial runs agree draw-for-draw.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a reliable 64-bit mixer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and a list of stream labels.
///
/// The labels act as a path in a seed tree: `derive(s, &[cell, rep])` and
/// `derive(s, &[cell, rep + 1])` are unrelated streams.
pub fn derive(base: u64, labels: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x6a09_e667_f3bc_c908);
    for &label in labels {
        state = splitmix64(state ^ splitmix64(label));
    }
    state
}

/// Deterministic generator for a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
