//! Seeding.
//!
//! Every stochastic routine takes a `u64` seed and draws from a ChaCha8
//! stream. Independent replicates derive their seeds with [`split_seed`], so
//! results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for replicate `index` under `base`:
/// `splitmix64(splitmix64(base) ^ index)`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}
