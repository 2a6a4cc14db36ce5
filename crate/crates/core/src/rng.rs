//! Seeded random streams. Every stochastic routine takes one of these
//! explicitly so runs are a pure function of their seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from a base seed and a label, used where two
/// consumers must not perturb each other (e.g. per-cell runs in a sweep).
pub fn substream(seed: u64, label: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}
