//! Seed derivation. One run seed fans out into independent, reproducible
//! streams for truncation draws, per-step minibatch noise, and evaluation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period mixing of a 64-bit state.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed, a stream tag, and an index within
/// the stream. Distinct (tag, index) pairs give unrelated streams.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix(splitmix(base ^ splitmix(tag)) ^ splitmix(index))
}

/// A generator for the derived stream. ChaCha keeps the stream identical
/// across platforms and compiler versions.
pub fn stream(base: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag, index))
}

/// Stream tags; one per independent consumer of randomness, so adding draws
/// to one consumer never shifts another's stream.
pub mod tag {
    /// Truncation index draws inside the optimizer.
    pub const TRUNCATION: u64 = 1;
    /// Per-step minibatch noise seeds handed to problems.
    pub const STEP_NOISE: u64 = 2;
    /// Evaluation-loss noise seed (fixed per run for smooth curves).
    pub const EVAL: u64 = 3;
    /// Initial parameter draws.
    pub const INIT: u64 = 4;
    /// Direction vectors of the synthetic decay problem.
    pub const DIRECTIONS: u64 = 5;
    /// Ground-truth parameter and observation noise draws of a dataset.
    pub const DATASET: u64 = 6;
    /// Reparameterization draws within one gradient minibatch.
    pub const BATCH: u64 = 7;
}
