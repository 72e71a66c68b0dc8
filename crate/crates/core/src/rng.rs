//! Seed threading.
//!
//! Every random draw comes from a ChaCha8 stream addressed by `(seed, stream)`,
//! so parallel jobs get independent substreams without sharing state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by different consumers of the same seed.
pub mod streams {
    pub const SAMPLE: u64 = 1 << 40;
    pub const PAIRING: u64 = 2 << 40;
    pub const TRAIN_INIT: u64 = 3 << 40;
    pub const POLY: u64 = 4 << 40;
}
