//! Seed-derived random streams.
//!
//! Every randomized routine takes either an explicit RNG or a `(seed, stream)`
//! pair. Streams derived from the same seed are independent, so work split
//! across tasks stays reproducible regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The crate's reproducible RNG.
pub type TaskRng = ChaCha12Rng;

/// Derive the RNG for a given task stream of a base seed.
pub fn derive_rng(seed: u64, stream: u64) -> TaskRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
