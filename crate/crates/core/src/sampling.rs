//! Seeded random streams.
//!
//! Every stream is ChaCha8 keyed by the 64-bit run seed (expanded with
//! `SeedableRng::seed_from_u64`) and selected by `set_stream(index)`, so
//! trial `i` of a sweep draws the same numbers regardless of how the sweep
//! is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
