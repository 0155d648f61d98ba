//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(master seed, lane, index)`, so the value of replicate `j` of feature `i`
//! does not depend on scheduling, thread count or which other replicates were
//! drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Lane reserved for joint (all-feature) kernel replicates.
pub const JOINT_LANE: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, lane: u64, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&lane.to_le_bytes());
        key[16..24].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// Stream for replicate `index` of feature `feature`.
    pub fn feature(&self, feature: usize, index: usize) -> ChaCha8Rng {
        self.stream(feature as u64, index as u64)
    }

    /// Stream for joint replicate `index`.
    pub fn joint(&self, index: usize) -> ChaCha8Rng {
        self.stream(JOINT_LANE, index as u64)
    }
}

/// SplitMix64 finaliser; turns small consecutive integers into well-spread
/// seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
