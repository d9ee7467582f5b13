//! Deterministic random streams keyed by `(seed, index, purpose)`.
//!
//! Each replication owns its streams, so results do not depend on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Bootstrap = 2,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with further key words into a new seed.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(mix64(seed), |acc, &w| mix64(acc ^ mix64(w)))
}

/// Stream for replication `index` and the given purpose.
pub fn stream(seed: u64, index: u64, purpose: Purpose) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[purpose as u64]));
    rng.set_stream(index);
    rng
}
