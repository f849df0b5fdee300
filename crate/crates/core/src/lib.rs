//! # uhmc
//!
//! Unadjusted Hamiltonian Monte Carlo samplers with partial velocity
//! refreshment, including stochastic-gradient variants, together with the
//! analytics needed to tune and certify them:
//!
//! - [`kernel`]: position-Verlet and damping steps, full transitions,
//!   trajectory and synchronous-coupling runners, concrete gradient oracles,
//!   and counter-keyed random streams for scheduling-independent
//!   reproducibility.
//! - [`gaussian`]: exact bias, convergence rates, scaling limits and
//!   optimal-parameter solvers for quadratic potentials over a curvature
//!   class `m ≤ ∇²U ≤ L`.
//! - [`bounds`]: contraction certificates for general log-concave targets
//!   (conditions, the tilted metric `M`, risk and bias bound calculators).
//! - [`diagnostics`]: decay-rate fits on coupling traces, batch-means
//!   stationarity moments, ergodic-average risk over parallel replicas, and
//!   empirical 1-d Wasserstein distances.
//!
//! All numerics are generic over the scalar type via [`Real`] (`f32` or
//! `f64`); the crate root re-exports `f64` aliases for the common case.
//!
//! ```
//! use uhmc::gaussian::{self, SpectralInterval};
//! use uhmc::kernel::{run_chain, ChainStream, Params, PhaseState, QuadraticOracle};
//!
//! let interval = SpectralInterval::new(1.0, 4.0).unwrap();
//! let choice = gaussian::optimal_params(&interval, 0.01, 2).unwrap();
//! assert!(choice.predicted.rho > 0.0);
//!
//! let oracle = QuadraticOracle::new(vec![1.0, 4.0]).unwrap();
//! let (end, stats) = run_chain(
//!     &oracle,
//!     &choice.params,
//!     &PhaseState::zeros(2),
//!     100,
//!     &ChainStream::new(42, 0),
//!     |_, _| {},
//! )
//! .unwrap();
//! assert_eq!(stats.grad_evals, 100 * choice.params.k as u64);
//! assert_eq!(end.dim(), 2);
//! ```

pub mod bounds;
pub mod diagnostics;
pub mod gaussian;
pub mod kernel;
mod real;

pub use real::Real;

/// `f64` aliases for the main types.
pub type Params = kernel::Params<f64>;
pub type PhaseState = kernel::PhaseState<f64>;
pub type CouplingTrace = kernel::CouplingTrace<f64>;
pub type SpectralInterval = gaussian::SpectralInterval<f64>;
pub type GaussRate = gaussian::GaussRate<f64>;
pub type TransitionMatrix = gaussian::TransitionMatrix<f64>;
pub type MetricMatrix = bounds::MetricMatrix<f64>;
pub type RateCertificate = bounds::RateCertificate<f64>;
pub type RiskBound = bounds::RiskBound<f64>;
pub type BiasBound = bounds::BiasBound<f64>;
pub type DecayFit = diagnostics::DecayFit<f64>;
pub type MomentReport = diagnostics::MomentReport<f64>;
