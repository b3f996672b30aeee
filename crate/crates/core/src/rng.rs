//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed`, with the replication
//! index selecting the 64-bit stream id. Replications can therefore run on any
//! thread in any order and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for replication `replication` of experiment `seed`.
pub fn stream(seed: u64, replication: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
