//! Seeded random streams. Every draw in the crate goes through ChaCha8 seeded
//! from a `u64`; independent sub-streams are derived with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded alongside seeded outputs.
pub const RNG_LABEL: &str = "chacha8-rand0.9/splitmix64";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `master`. Distinct streams of one master
/// never share a seed in practice and the mapping is fixed across builds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}
