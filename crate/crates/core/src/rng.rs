//! Stable seed derivation.
//!
//! Every stochastic stage in the crate owns its randomness through a 64-bit
//! seed token. Derived seeds are produced by chaining a splitmix64 finalizer
//! over the parent seed and a sequence of context words, so the mapping is
//! platform-independent and documented here once: callers that persist a seed
//! can regenerate identical data on any machine.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// splitmix64 finalizer; bijective on u64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and an ordered list of context words.
pub fn derive_seed(parent: u64, words: &[u64]) -> u64 {
    let mut s = mix64(parent);
    for (i, &w) in words.iter().enumerate() {
        s = mix64(s ^ mix64(w.wrapping_add(i as u64 + 1)));
    }
    s
}

/// Deterministic RNG used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
