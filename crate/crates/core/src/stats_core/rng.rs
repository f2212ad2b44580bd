//! Seeded random number streams. Callers own all RNG state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent counter-based stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for replication `rep` of grid point `point`.
pub fn replication_stream(point: usize, rep: usize) -> u64 {
    ((point as u64) << 32) | (rep as u64 & 0xFFFF_FFFF)
}
