//! Counter-style random streams.
//!
//! Every random draw made by a chain is produced by a fresh ChaCha8 generator
//! keyed by `(seed, chain, transition, stage)`. Coupled chains reuse the same
//! key and therefore the same noise; parallel replicas use distinct chain ids,
//! so results never depend on scheduling or on how work is split across
//! threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::real::Real;

/// Stage discriminants inside one transition.
pub mod stage {
    /// Velocity damping before the Verlet leg.
    pub const DAMP_IN: u64 = 0;
    /// Velocity damping after the Verlet leg.
    pub const DAMP_OUT: u64 = 1;
    /// Auxiliary draw for Verlet step `k` is `AUX_BASE + k`.
    pub const AUX_BASE: u64 = 2;
}

/// Reserved transition index for draws made outside any transition
/// (initial offsets, synthetic data, ...).
pub const SETUP_TRANSITION: u64 = u64::MAX;

/// Identifies the noise source of one chain (or replica).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainStream {
    seed: u64,
    chain: u64,
}

impl ChainStream {
    pub fn new(seed: u64, chain: u64) -> Self {
        Self { seed, chain }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chain(&self) -> u64 {
        self.chain
    }

    /// Fresh generator for one `(transition, stage)` slot.
    pub fn rng(&self, transition: u64, stage: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.chain.to_le_bytes());
        key[16..24].copy_from_slice(&transition.to_le_bytes());
        key[24..32].copy_from_slice(&stage.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// Draws a standard Gaussian vector of length `d`.
pub fn standard_normal_vec<R>(rng: &mut ChaCha8Rng, d: usize) -> Vec<R>
where
    R: Real,
    StandardNormal: Distribution<R>,
{
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}
