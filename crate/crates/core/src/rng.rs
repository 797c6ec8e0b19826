//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream so that, for
//! a given seed, the dataset split and the random query strategy never
//! perturb each other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPLIT_STREAM: u64 = 1;
pub const QUERY_STREAM: u64 = 2;
pub const SYNTHETIC_STREAM: u64 = 3;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
