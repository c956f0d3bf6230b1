//! Deterministic RNG substreams.
//!
//! Every unit of parallel work (one recipe under one task/knob setting) gets
//! its own ChaCha stream keyed by a SHA-256 hash of the run seed and the
//! work's identity. Streams are independent of execution order, so parallel
//! and serial generation produce identical output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// A root key from which per-work-unit streams are derived.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey {
    pub seed: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { seed }
    }

    /// Derive an independent stream from the seed plus arbitrary labels.
    /// Labels are length-prefixed before hashing so distinct label lists
    /// can never collide by concatenation.
    pub fn stream(&self, labels: &[&[u8]]) -> ChaCha12Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for l in labels {
            h.update((l.len() as u64).to_le_bytes());
            h.update(l);
        }
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha12Rng::from_seed(key)
    }
}
