//! Seeded random number generation.
//!
//! Every random draw in the crate goes through ChaCha8 seeded from a `u64`,
//! so runs replay bit-identically on every platform. Replicas derive their
//! stream from `seed + replica index`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replica `index` of a run seeded with `seed`.
pub fn replica(seed: u64, index: u64) -> Rng {
    seeded(replica_seed(seed, index))
}

/// Seed of replica `index` of a run seeded with `seed`.
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}
