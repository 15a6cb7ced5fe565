//! Seeded random streams.
//!
//! All randomness comes from `Xoshiro256PlusPlus`, seeded through SplitMix64
//! (`SeedableRng::seed_from_u64`). There is no global generator: every
//! consumer takes an explicit seed. Independent sub-streams (one per Monte
//! Carlo replicate, one per restart) are derived by mixing the master seed
//! with the stream coordinates, so they do not depend on execution order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream at `path` below `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
