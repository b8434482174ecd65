//! Deterministic stream derivation.
//!
//! Every source of randomness in the engine is a ChaCha12 stream seeded by
//! SHA-256 over (master seed, replica index, purpose label). Streams for
//! distinct (replica, purpose) pairs are independent for all practical
//! purposes, and a replica's stream never depends on scheduling, so results
//! are reproducible byte for byte across thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive the stream for (master seed, replica, purpose).
pub fn derive_stream(master_seed: u64, replica: u64, purpose: &str) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(replica.to_le_bytes());
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}
