use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Per-task seed: the first eight bytes (little endian) of
/// `SHA-256(seed_le ‖ len(label)_le ‖ label ‖ part₀_le ‖ part₁_le ‖ …)`.
///
/// Tasks keyed this way draw from independent streams regardless of the order
/// in which a thread pool schedules them.
pub fn derive_seed(seed: u64, label: &str, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let digest = h.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub fn task_rng(seed: u64, label: &str, parts: &[u64]) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(seed, label, parts))
}
