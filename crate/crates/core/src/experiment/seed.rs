use sha2::{Digest, Sha256};

/// `seed_i = SHA-256(master || i || tag)` truncated to 64 bits.
///
/// Each realization's seed depends only on its own index, so growing an
/// ensemble never changes existing members.
pub fn derive_seed(master: u64, index: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

/// Stream tags, one per independent source of randomness.
pub const VELOCITY: &str = "velocity";
pub const FORCED_VELOCITY: &str = "forced-velocity";
pub const NOISE: &str = "noise";
