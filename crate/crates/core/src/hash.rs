//! SHA-256 helpers shared across the crate.

use sha2::digest::generic_array::GenericArray;
use sha2::{Digest, Sha256};

/// A 32-byte digest.
pub type Hash32 = [u8; 32];

pub const ZERO_HASH: Hash32 = [0u8; 32];

pub fn sha256(data: &[u8]) -> Hash32 {
    Sha256::digest(data).into()
}

/// Hashes the concatenation of several slices without allocating.
pub fn sha256_parts(parts: &[&[u8]]) -> Hash32 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// SHA256(SHA256(data)).
pub fn dsha256(data: &[u8]) -> Hash32 {
    sha256(&sha256(data))
}

const SHA256_IV: [u32; 8] = [
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
];

/// Computes SHA256(prefix ∥ LE64(counter)) for a fixed 32-byte prefix and a
/// stream of counters. The 40-byte message fits one compression block, so the
/// padded block is prepared once and only the counter bytes change.
#[derive(Clone)]
pub struct CounterHasher {
    block: [u8; 64],
}

impl CounterHasher {
    pub fn new(prefix: &Hash32) -> Self {
        let mut block = [0u8; 64];
        block[..32].copy_from_slice(prefix);
        block[40] = 0x80;
        // message length in bits, big endian
        block[56..].copy_from_slice(&(40u64 * 8).to_be_bytes());
        CounterHasher { block }
    }

    #[inline]
    fn state(&mut self, counter: u64) -> [u32; 8] {
        self.block[32..40].copy_from_slice(&counter.to_le_bytes());
        let mut state = SHA256_IV;
        sha2::compress256(&mut state, &[*GenericArray::from_slice(&self.block)]);
        state
    }

    /// First byte of the digest.
    #[inline]
    pub fn first_byte(&mut self, counter: u64) -> u8 {
        (self.state(counter)[0] >> 24) as u8
    }

    pub fn digest(&mut self, counter: u64) -> Hash32 {
        let state = self.state(counter);
        let mut out = [0u8; 32];
        for (chunk, word) in out.chunks_exact_mut(4).zip(state) {
            chunk.copy_from_slice(&word.to_be_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_hasher_matches_reference() {
        let prefix = sha256(b"prefix");
        let mut h = CounterHasher::new(&prefix);
        for counter in [0u64, 1, 255, 256, 1 << 40, u64::MAX] {
            let reference = sha256_parts(&[&prefix, &counter.to_le_bytes()]);
            assert_eq!(h.digest(counter), reference);
            assert_eq!(h.first_byte(counter), reference[0]);
        }
    }

    #[test]
    fn dsha_of_empty() {
        assert_eq!(
            hex::encode(dsha256(b"")),
            "5df6e0e2761359d30a8275058e299fcc0381534545f55cf43e41983f5d4c9456"
        );
    }
}
