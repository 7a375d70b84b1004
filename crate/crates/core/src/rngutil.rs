//! Seed-derived RNG substreams.
//!
//! Every source of randomness in the crate draws from a named substream of a
//! single root seed, so that runs are reproducible and independent components
//! (chains, data synthesis, Monte Carlo estimators) do not share streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a on the substream name; cheap and stable across platforms.
fn hash_name(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG for the substream `name` of the root `seed`.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&hash_name(name).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
