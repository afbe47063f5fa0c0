//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit seed. Independent sub-tasks
//! (one tree, one restart, one synthetic product) get their own ChaCha
//! stream so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// RNG for sub-task `stream` under the master `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw of `amount` distinct indices from `0..len`, in draw order.
/// Consumes no randomness when `amount == 0`.
pub fn sample_indices<R: rand::Rng>(rng: &mut R, len: usize, amount: usize) -> alloc::vec::Vec<usize> {
    rand::seq::index::sample(rng, len, amount).into_vec()
}
