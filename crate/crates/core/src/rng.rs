//! Deterministic random streams.
//!
//! Every run of an ensemble draws from its own ChaCha8 stream selected by
//! `(master seed, stream index)`, so results never depend on how runs are
//! scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream number `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Two-level stream index, e.g. `(epoch, habitat)`.
pub fn stream2(master_seed: u64, outer: u32, inner: u32) -> StreamRng {
    stream(master_seed, (u64::from(outer) << 32) | u64::from(inner))
}
