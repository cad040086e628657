//! Seed derivation.
//!
//! Every stochastic step owns a `ChaCha8Rng` seeded from a 64-bit value.
//! Child seeds are derived with the SplitMix64 finalizer applied to
//! `master ^ (stream + 1) * GOLDEN`, so replicate `r` of a run always sees
//! the same stream no matter which worker executes it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream` from `master`.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_add(1).wrapping_mul(GOLDEN))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
