//! Deterministic seed derivation.
//!
//! Every component that needs randomness derives its own seed from a parent
//! seed and a fixed stream id, so that parallel workers and repeated runs
//! agree bit-for-bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-separated stream ids for the fixed consumers of a dataset seed.
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_SPLIT: u64 = 2;
pub const STREAM_PAIRING: u64 = 3;
pub const STREAM_MODEL: u64 = 4;
pub const STREAM_LOOPS: u64 = 5;
pub const STREAM_ANCHOR: u64 = 6;

/// SplitMix64 finalizer; decorrelates consecutive seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed for `stream` under `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

/// Seeded RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
