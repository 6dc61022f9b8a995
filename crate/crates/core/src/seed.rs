//! Seed derivation.
//!
//! Every random decision in the pipeline draws from a stream derived from
//! `(master_seed, purpose, key)`. Streams for different tasks never share
//! state, so adding or removing a task leaves every other task's output
//! unchanged.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A seeded random stream.
pub type Stream = ChaCha8Rng;

/// Derives the stream for `purpose` scoped to `key` (usually a task name).
pub fn stream(master_seed: u64, purpose: &str, key: &str) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(b"instmix-stream-v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update((key.len() as u64).to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}
