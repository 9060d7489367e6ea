//! One seeded generator namespace, split into independent streams per purpose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    LinkNegatives = 2,
    LocationNegatives = 3,
    Shuffle = 4,
    Splits = 5,
    Synth = 6,
    Sampling = 7,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
