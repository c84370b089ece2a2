//! Seeding rule shared by every randomized stage.
//!
//! All randomness comes from ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
//! Independent consumers draw from disjoint ChaCha streams: stream id
//! `(purpose << 32) | index`, where `index` is a per-purpose counter such as
//! the active-learning cycle. Bootstrap resampling uses stream 0, so its draws
//! equal those of a fresh `ChaCha8Rng::seed_from_u64(seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Bootstrap = 0,
    EvalSubset = 1,
    RandomSelection = 2,
    KMeansInit = 3,
    SeedPool = 4,
}

pub fn stream_rng(seed: u64, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index as u64);
    rng
}
