//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha stream derived from a user
//! seed plus a stream index, so replicate `i` of a bootstrap or chain `k` of
//! a multi-chain run sees the same numbers however the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// RNG for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Largest seed accepted anywhere; seeds are recorded in TOML manifests,
/// whose integers are signed 64-bit.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Derive a child seed, for handing a seed (rather than an RNG) onwards.
/// The result is at most [`MAX_SEED`].
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) & MAX_SEED
}
