//! Reproducible random streams.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`]. A stream is
//! identified by a 64-bit seed plus a 64-bit stream number:
//!
//! * the seed is expanded with `SeedableRng::seed_from_u64`;
//! * the stream number selects one of ChaCha's 2^64 independent streams via
//!   `set_stream`.
//!
//! Within a transmission session the stream number is the 1-based word index
//! `t`, so a word's noise never depends on how many draws earlier words made.
//! Session seeds for sweeps are derived with [`derive_seed`], which depends
//! only on the base seed and the session's position, never on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for item `index` under `base` (SplitMix64 finalizer over the
/// golden-ratio-spaced sequence).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
