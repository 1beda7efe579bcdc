//! Seed derivation for reproducible, shardable random streams.
//!
//! Every stochastic step draws from a ChaCha8 stream whose seed is the
//! SHA-256 digest of (master seed, step name, shard index). Results depend
//! only on those three values, never on how shards are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Number of draws (or paths) generated per shard.
pub const SHARD_SIZE: usize = 4096;

/// Derives a 32-byte stream seed.
pub fn derive_seed(master: u64, step: &str, shard: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((step.len() as u64).to_le_bytes());
    h.update(step.as_bytes());
    h.update(shard.to_le_bytes());
    h.finalize().into()
}

pub fn stream(master: u64, step: &str, shard: u64) -> StreamRng {
    StreamRng::from_seed(derive_seed(master, step, shard))
}

/// Splits `n` items into consecutive shards of [`SHARD_SIZE`]; yields (shard index, start, len).
pub fn shards(n: usize) -> impl Iterator<Item = (u64, usize, usize)> {
    (0..n.div_ceil(SHARD_SIZE)).map(move |i| {
        let start = i * SHARD_SIZE;
        (i as u64, start, SHARD_SIZE.min(n - start))
    })
}
