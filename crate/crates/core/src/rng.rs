//! Seed derivation for independent, order-free random streams.
//!
//! Every stochastic stage draws from a ChaCha stream keyed by the run seed and a
//! label describing the consumer, so results never depend on the order in which
//! records or epochs are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Mixes a base seed with a stream label and an index into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, label: &str, index: u64) -> Rng {
    seeded(derive_seed(seed, label, index))
}

/// Hex SHA-256 of arbitrary bytes; used for config and vocabulary fingerprints.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, "split", 0).random();
        let b: u64 = stream(7, "split", 0).random();
        let c: u64 = stream(7, "split", 1).random();
        let d: u64 = stream(7, "splits", 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
