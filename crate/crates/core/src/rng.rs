//! Seed expansion.
//!
//! Every stochastic routine takes one 64-bit seed and derives an independent
//! ChaCha stream per work item from a path of indices, e.g. `(position,
//! trial)`. Results therefore do not depend on how work is split between
//! threads or in which order items are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with an index path into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// Random stream for the work item identified by `path`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

// Domain tags keep streams for different purposes apart.
pub const TAG_TRAIN: u64 = 0x74_72_61_69_6e;
pub const TAG_TEST: u64 = 0x7465_7374;
pub const TAG_DOMAIN: u64 = 0x64_6f_6d;
pub const TAG_FRIIS: u64 = 1;
pub const TAG_RAYLEIGH: u64 = 2;
