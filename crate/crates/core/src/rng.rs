//! Seeded random streams.
//!
//! Every randomized routine owns a [`VddRng`] (ChaCha8, portable across
//! platforms) built from a 64-bit seed. Independent streams for grid cells,
//! epochs or workers come from [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type VddRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> VddRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a base seed together with a sequence of stream coordinates.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix(base), |acc, &c| mix(acc ^ mix(c)))
}
