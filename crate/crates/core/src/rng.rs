//! Seeded random streams.
//!
//! Every chain draws from a ChaCha8 generator keyed by the run seed, with the
//! chain's component index selecting the ChaCha stream (the 64-bit nonce).
//! ChaCha is counter-based, so stream `k` is the same sequence whether it is
//! consumed first, last, or on another thread.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as ChainRng;

/// Generator for chain `stream` of the run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
