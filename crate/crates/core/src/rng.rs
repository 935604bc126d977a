//! Seeded generators. Every sampler owns a generator built from an explicit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator algorithm, recorded next to seeds in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8";

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices.
///
/// Each index is absorbed through a SplitMix64 step, so `mix_seed(s, &[a, b])` differs from
/// `mix_seed(s, &[b, a])` and from `mix_seed(s, &[a])`.
pub fn mix_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &i| splitmix(acc ^ splitmix(i.wrapping_add(0x632B_E59B_D9B4_E019))))
}
