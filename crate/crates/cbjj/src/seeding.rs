//! Deterministic stream seeding.
//!
//! Every random quantity in the crate flows from one root seed. Work items
//! (trajectories, protocol records, sweep points) get their own counter-based
//! streams derived by a stable splitmix64 chain, so results are bit-identical
//! regardless of how items are scheduled across workers.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// splitmix64 step; the standard finalizer with full 64-bit avalanche.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a tag path.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(root);
    for &t in tags {
        s = splitmix64(s ^ t);
    }
    s
}

/// Stable 64-bit hash of a byte string (FNV-1a), used to tag streams by
/// command name.
pub fn tag_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A ChaCha stream keyed by (root, tag path); independent per work item.
pub fn stream_rng(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tags))
}

/// Stream tags for the crate's random consumers.
pub mod tags {
    /// Langevin trajectory streams.
    pub const TRAJECTORY: u64 = 0x7452_414A;
    /// Protocol record streams.
    pub const RECORD: u64 = 0x5245_4352;
    /// Sweep-point streams for CLI commands.
    pub const SWEEP_POINT: u64 = 0x5057_5054;
}
