//! Chain mechanics: Verlet and damping steps, full (SG)HMC transitions,
//! trajectory and synchronous-coupling runners, and concrete gradient oracles.
//!
//! A transition with parameters `(δ, K, η)` is: damp the velocity by `η`,
//! apply `K` position-Verlet steps of size `δ` (each with a freshly drawn
//! auxiliary variable when the oracle is stochastic), damp again. The chain
//! is unadjusted: there is no accept/reject correction.

mod chain;
mod oracle;
pub mod rng;

pub use chain::{
    damping_step, run_chain, run_coupled, transition, transition_with_noise, verlet_step,
    CouplingStep, CouplingTrace, RunStats,
};
pub use oracle::{
    validate_curvature, CountingOracle, GradientOracle, MiniBatchLsqOracle,
    PerturbedQuadraticOracle, QuadraticOracle,
};
pub use rng::{standard_normal_vec, ChainStream};

use crate::real::{r64, rus, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite force at coordinate {coordinate}")]
    NonFiniteForce { coordinate: usize },
    #[error("non-finite state at coordinate {coordinate} (position block first)")]
    NonFiniteState { coordinate: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("curvature check failed: directional curvature {value} outside [{lo}, {hi}] at probe {probe}")]
    CurvatureOutOfBounds {
        value: f64,
        lo: f64,
        hi: f64,
        probe: usize,
    },
    #[error("oracle construction failed: {0}")]
    InvalidOracle(String),
}

/// Sampler triple `(δ, K, η)`: step size, Verlet steps per transition,
/// velocity damping factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params<R> {
    pub delta: R,
    pub k: u32,
    pub eta: R,
}

impl<R: Real> Params<R> {
    /// Requires `δ > 0`, `K ≥ 1` and `0 ≤ η < 1`.
    pub fn new(delta: R, k: u32, eta: R) -> Result<Self, KernelError> {
        if !(delta.is_finite() && delta > R::zero()) {
            return Err(KernelError::InvalidParams(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        if k < 1 {
            return Err(KernelError::InvalidParams("k must be >= 1".into()));
        }
        if !(eta.is_finite() && eta >= R::zero() && eta < R::one()) {
            return Err(KernelError::InvalidParams(format!(
                "eta must be in [0, 1), got {eta}"
            )));
        }
        Ok(Self { delta, k, eta })
    }

    /// Stability of the Verlet leg on curvature up to `l`: `δ²·l < 4`.
    pub fn is_stable_for(&self, l: R) -> bool {
        self.delta * self.delta * l < r64(4.0)
    }

    /// Integration time of one transition, `Kδ`.
    pub fn horizon(&self) -> R {
        self.delta * rus(self.k as usize)
    }
}

/// Phase-space point `z = (x, v)` with `x, v ∈ ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState<R> {
    x: Vec<R>,
    v: Vec<R>,
}

impl<R: Real> PhaseState<R> {
    /// Requires equal, nonzero lengths and finite entries.
    pub fn new(x: Vec<R>, v: Vec<R>) -> Result<Self, KernelError> {
        if x.is_empty() || x.len() != v.len() {
            return Err(KernelError::DimensionMismatch {
                expected: x.len().max(1),
                got: v.len(),
            });
        }
        for (i, c) in x.iter().chain(v.iter()).enumerate() {
            if !c.is_finite() {
                return Err(KernelError::NonFiniteState { coordinate: i });
            }
        }
        Ok(Self { x, v })
    }

    /// Origin of phase space in dimension `d`.
    pub fn zeros(d: usize) -> Self {
        Self {
            x: vec![R::zero(); d],
            v: vec![R::zero(); d],
        }
    }

    pub(crate) fn from_parts_unchecked(x: Vec<R>, v: Vec<R>) -> Self {
        Self { x, v }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[R] {
        &self.x
    }

    pub fn v(&self) -> &[R] {
        &self.v
    }

    /// Coordinate-wise difference `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            x: self.x.iter().zip(&other.x).map(|(&a, &b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// Euclidean norm of `(x, v)` as a vector in `ℝ^{2d}`.
    pub fn norm(&self) -> R {
        let mut s = R::zero();
        for &c in self.x.iter().chain(self.v.iter()) {
            s += c * c;
        }
        s.sqrt()
    }
}
