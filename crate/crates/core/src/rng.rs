//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream (`rand_chacha`)
//! whose 64-bit seed is derived from a user seed, a purpose tag and a list of
//! indices (run, rank, repeat, ...). The derivation folds each component
//! through the SplitMix64 finalizer, so streams for distinct tags or indices
//! are independent and a task's draws never depend on which other tasks ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all random streams.
pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed from `(seed, tag, indices)`.
pub fn derive_seed(seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    // separator so that ("ab", [..]) and ("a", [b, ..]) cannot collide
    h = splitmix64(h ^ 0xFF);
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

/// Returns the stream for `(seed, tag, indices)`.
pub fn stream(seed: u64, tag: &str, indices: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, indices))
}
