//! Named, seedable random streams.
//!
//! Every stochastic step draws from a stream derived from `(seed, label, index)`,
//! so results never depend on thread scheduling or on the order in which
//! independent work items are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator behind every stream.
pub type Stream = ChaCha8Rng;

/// Stream labels used by the simulator. Kept in one place so the bound and the
/// Monte Carlo sweep agree on which realization a block index refers to.
pub mod label {
    pub const CHANNEL: &str = "channel";
    pub const CSI: &str = "csi";
    pub const DESIGN: &str = "design";
    pub const TRIAL: &str = "trial";
}

/// Derives an independent stream for `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> Stream {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
