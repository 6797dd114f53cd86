//! Seed derivation.
//!
//! Every random consumer in a run gets its own sub-seed derived from the
//! master seed: `sub = splitmix64(master ^ splitmix64(stream))`, where
//! `stream` is one of the constants below. Random streams are
//! `rand_chacha::ChaCha8Rng::seed_from_u64(sub)`, which is portable across
//! platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const MODEL_INIT_STREAM: u64 = 1;
pub const OPTIMIZER_STREAM: u64 = 2;
pub const SHUFFLE_STREAM: u64 = 3;

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
