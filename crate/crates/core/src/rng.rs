//! Seed handling. Every stochastic routine takes an explicit generator;
//! independent sub-streams are ChaCha streams of a single seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for sub-stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream ids reserved for the different phases of a run.
pub mod purpose {
    pub const TRAIN_EPOCH: u64 = 0;
    pub const MONITOR: u64 = 1 << 40;
    pub const INIT: u64 = 2 << 40;
    pub const EVAL: u64 = 3 << 40;
}
