//! General log-concave-case certificates: explicit conditions under which a
//! synchronous coupling contracts a tilted norm `‖·‖_M` at a certified rate,
//! plus ergodic-risk and discretization-bias bound calculators.
//!
//! The risk and bias bounds carry exponential prefactors that overflow `f64`
//! for every parameter set that actually passes the conditions, so both
//! calculators work in log space and additionally expose the (possibly
//! infinite) linear values.

use thiserror::Error;

use crate::gaussian::SpectralInterval;
use crate::kernel::{Params, PhaseState};
use crate::real::{r64, rus, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("no certified contraction rate for these parameters: {0}")]
    MissingCertificate(String),
    #[error("metric is not positive definite (p = {p}, q = {q}, r = {r})")]
    NotPositiveDefinite { p: f64, q: f64, r: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Blockwise quadratic form `M = [[p·I, q·I], [q·I, r·I]]` on phase space:
/// `‖(x, v)‖²_M = p|x|² + 2q x·v + r|v|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricMatrix<R> {
    pub p: R,
    pub q: R,
    pub r: R,
}

impl<R: Real> MetricMatrix<R> {
    /// Requires positive definiteness: `p > 0` and `p·r − q² > 0`.
    pub fn new(p: R, q: R, r: R) -> Result<Self, BoundsError> {
        if !(p > R::zero() && p * r - q * q > R::zero()) {
            return Err(BoundsError::NotPositiveDefinite {
                p: p.to_f64().unwrap_or(f64::NAN),
                q: q.to_f64().unwrap_or(f64::NAN),
                r: r.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { p, q, r })
    }

    /// Euclidean norm.
    pub fn identity() -> Self {
        Self {
            p: R::one(),
            q: R::zero(),
            r: R::one(),
        }
    }

    /// `‖z‖_M`.
    pub fn norm(&self, z: &PhaseState<R>) -> R {
        let d = z.dim();
        let (mut xx, mut xv, mut vv) = (R::zero(), R::zero(), R::zero());
        for i in 0..d {
            xx += z.x()[i] * z.x()[i];
            xv += z.x()[i] * z.v()[i];
            vv += z.v()[i] * z.v()[i];
        }
        (self.p * xx + r64::<R>(2.0) * self.q * xv + self.r * vv)
            .max(R::zero())
            .sqrt()
    }

    /// Extreme generalized eigenvalues of `M` relative to the blockwise
    /// diagonal form `diag(dx·I, dv·I)`: the tightest constants `(lo, hi)`
    /// with `lo·(dx|x|² + dv|v|²) ≤ ‖z‖²_M ≤ hi·(dx|x|² + dv|v|²)`.
    pub fn eigen_range_relative(&self, dx: R, dv: R) -> (R, R) {
        let a = self.p / dx;
        let b = self.q / (dx * dv).sqrt();
        let c = self.r / dv;
        let half_tr = (a + c) / r64(2.0);
        let disc = (half_tr * half_tr - (a * c - b * b)).max(R::zero()).sqrt();
        (half_tr - disc, half_tr + disc)
    }
}

/// `‖z‖_M` as a free function.
pub fn m_norm<R: Real>(metric: &MetricMatrix<R>, z: &PhaseState<R>) -> R {
    metric.norm(z)
}

/// Outcome of evaluating the contraction conditions for `(δ, K, η)` over a
/// curvature class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    /// `2δ√L ≤ 1`.
    pub stability: bool,
    /// `1 − η² ≥ 8KδL^{3/2}/m`.
    pub damping: bool,
    /// `e^{5Kδ√L/4}·Kδ ≤ m^{3/2}/(40L²(1−η²))`.
    pub exponential_step: bool,
    /// `5δK ≤ m/L^{3/2}`; only consulted when `η = 0`.
    pub position_hmc: bool,
}

/// Evaluates all conditions; reports, never fails.
pub fn check_conditions<R: Real>(
    params: &Params<R>,
    interval: &SpectralInterval<R>,
) -> ConditionReport {
    let (m, l) = (interval.m(), interval.l());
    let kd = params.horizon();
    let one_minus_eta_sq = R::one() - params.eta * params.eta;
    let stability = r64::<R>(2.0) * params.delta * l.sqrt() <= R::one();
    let damping = one_minus_eta_sq >= r64::<R>(8.0) * kd * l.powf(r64(1.5)) / m;
    let exponential_step = (r64::<R>(1.25) * kd * l.sqrt()).exp() * kd
        <= m.powf(r64(1.5)) / (r64::<R>(40.0) * l * l * one_minus_eta_sq);
    let position_hmc = r64::<R>(5.0) * kd <= m / l.powf(r64(1.5));
    ConditionReport {
        stability,
        damping,
        exponential_step,
        position_hmc,
    }
}

/// Which contraction statement backs a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertRegime {
    /// `η = 0`: the position marginal contracts, `ρ = (2/5)(δK)²m`.
    PositionHmc,
    /// Any `η`: the `M`-norm contracts, `ρ = (δK)²m/(40(1−η²))`.
    General,
}

/// Certified per-transition contraction factor with the conditions checked.
#[derive(Clone, Debug)]
pub struct RateCertificate<R> {
    pub rho: Option<R>,
    pub regime: Option<CertRegime>,
    /// Contraction metric; present only in the general regime (the
    /// position-HMC statement contracts `|x − x'|` alone).
    pub metric: Option<MetricMatrix<R>>,
    pub conditions: ConditionReport,
    /// Names of the conditions that blocked certification (empty on success).
    pub failed: Vec<&'static str>,
}

impl<R: Real> RateCertificate<R> {
    pub fn is_certified(&self) -> bool {
        self.rho.is_some()
    }

    pub fn rho_or_err(&self) -> Result<R, BoundsError> {
        self.rho
            .ok_or_else(|| BoundsError::MissingCertificate(self.failed.join(", ")))
    }
}

/// Certified contraction rate for `(δ, K, η)` over the class, with the
/// position-HMC statement preferred at `η = 0` (its constant is 16× better).
pub fn certified_rate<R: Real>(
    params: &Params<R>,
    interval: &SpectralInterval<R>,
) -> RateCertificate<R> {
    let (m, l) = (interval.m(), interval.l());
    let conditions = check_conditions(params, interval);
    let kd = params.horizon();
    let one_minus_eta_sq = R::one() - params.eta * params.eta;

    if params.eta == R::zero() && conditions.stability && conditions.position_hmc {
        // rescaled units delta' = delta sqrt(L), m' = m/L
        let kd_resc = kd * l.sqrt();
        let rho = r64::<R>(0.4) * kd_resc * kd_resc * (m / l);
        return RateCertificate {
            rho: Some(rho),
            regime: Some(CertRegime::PositionHmc),
            metric: None,
            conditions,
            failed: Vec::new(),
        };
    }

    if conditions.stability && conditions.damping && conditions.exponential_step {
        match metric_matrix(params, interval) {
            Ok(metric) => {
                let rho = kd * kd * m / (r64::<R>(40.0) * one_minus_eta_sq);
                return RateCertificate {
                    rho: Some(rho),
                    regime: Some(CertRegime::General),
                    metric: Some(metric),
                    conditions,
                    failed: Vec::new(),
                };
            }
            Err(_) => {
                return RateCertificate {
                    rho: None,
                    regime: None,
                    metric: None,
                    conditions,
                    failed: vec!["metric_positive_definite"],
                };
            }
        }
    }

    let mut failed = Vec::new();
    if !conditions.stability {
        failed.push("stability");
    }
    if !conditions.damping {
        failed.push("damping");
    }
    if !conditions.exponential_step {
        failed.push("exponential_step");
    }
    if params.eta == R::zero() && !conditions.position_hmc {
        failed.push("position_hmc");
    }
    RateCertificate {
        rho: None,
        regime: None,
        metric: None,
        conditions,
        failed,
    }
}

/// Contraction metric of the general regime, built in rescaled coordinates
/// (`L' = 1`, `m' = m/L`, `δ' = δ√L`) as `M' = [[1, c'], [c', a']]` with
/// `a' = m'/2`, `c' = Kδ'η/(1−η²)`, then mapped back so that
/// `‖(x, v)‖_M = ‖(√L·x, v)‖_{M'}/√L`.
pub fn metric_matrix<R: Real>(
    params: &Params<R>,
    interval: &SpectralInterval<R>,
) -> Result<MetricMatrix<R>, BoundsError> {
    let l = interval.l();
    let a = interval.m() / l / r64(2.0);
    let c = params.horizon() * l.sqrt() * params.eta / (R::one() - params.eta * params.eta);
    MetricMatrix::new(R::one(), c / l.sqrt(), a / l)
}

/// Coupling remainder constant `C_{K,δ} = (1/4)e^{5(K−1)δ/4}·δ³·(K³+K−1)`.
pub fn c_k_delta<R: Real>(k: u32, delta: R) -> R {
    let kf = rus::<R>(k as usize);
    let expo = (r64::<R>(1.25) * (kf - R::one()) * delta).exp();
    r64::<R>(0.25) * expo * delta.powi(3) * (kf * kf * kf + kf - R::one())
}

/// `ln(e^a + e^b)` without overflow.
fn log_sum_exp<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Upper bound on the mean squared error of an ergodic average of a
/// 1-Lipschitz observable over `n` post-burn-in transitions.
#[derive(Clone, Copy, Debug)]
pub struct RiskBound<R> {
    pub n: u64,
    pub n0: u64,
    /// Initial `M`-Wasserstein distance bound.
    pub w0: R,
    /// Second-moment floor of the stochastic force at its fixed point.
    pub nb: R,
    /// `Var_M(μ)` upper bound (may be `+∞` in linear scale).
    pub var_bound: R,
    pub ln_var_bound: R,
    /// Total bound (may be `+∞` in linear scale); `ln_total` is exact.
    pub total: R,
    pub ln_total: R,
}

/// `3(1−ρ)^{2n₀}/(ρn)²·W₀² + 6/(nρ)·Var_M` with
/// `Var_M ≤ (22/ρ)·e^{25δKL/(ρ√m)}·((1−η²)d + (6m/L^{5/2})δK·N_b)`.
#[allow(clippy::too_many_arguments)]
pub fn risk_bound<R: Real>(
    cert: &RateCertificate<R>,
    params: &Params<R>,
    interval: &SpectralInterval<R>,
    d: usize,
    n: u64,
    n0: u64,
    w0: R,
    nb: R,
) -> Result<RiskBound<R>, BoundsError> {
    let rho = cert.rho_or_err()?;
    if n == 0 {
        return Err(BoundsError::InvalidArgument("n must be >= 1".into()));
    }
    if w0 < R::zero() || nb < R::zero() {
        return Err(BoundsError::InvalidArgument(
            "w0 and nb must be >= 0".into(),
        ));
    }
    let (m, l) = (interval.m(), interval.l());
    let kd = params.horizon();
    let one_minus_eta_sq = R::one() - params.eta * params.eta;
    let nf = rus::<R>(n as usize);

    let moment = one_minus_eta_sq * rus::<R>(d) + r64::<R>(6.0) * m / l.powf(r64(2.5)) * kd * nb;
    let ln_var =
        (r64::<R>(22.0) / rho).ln() + r64::<R>(25.0) * kd * l / (rho * m.sqrt()) + moment.ln();

    let ln_term1 = if w0 == R::zero() {
        R::neg_infinity()
    } else {
        r64::<R>(3.0).ln() + r64::<R>(2.0) * rus::<R>(n0 as usize) * (R::one() - rho).ln()
            - r64::<R>(2.0) * (rho * nf).ln()
            + r64::<R>(2.0) * w0.ln()
    };
    let ln_term2 = r64::<R>(6.0).ln() - (nf * rho).ln() + ln_var;
    let ln_total = log_sum_exp(ln_term1, ln_term2);

    Ok(RiskBound {
        n,
        n0,
        w0,
        nb,
        var_bound: ln_var.exp(),
        ln_var_bound: ln_var,
        total: ln_total.exp(),
        ln_total,
    })
}

/// Upper bound on the `W₂` distance between the target and the invariant
/// position marginal in the deterministic-gradient case.
#[derive(Clone, Copy, Debug)]
pub struct BiasBound<R> {
    /// Hessian Lipschitz constant of the potential.
    pub l2: R,
    /// `C̃ = (7(L+L₂)/m)·exp(111(1−η²)√L/(δKm))` (may be `+∞`).
    pub ctilde: R,
    pub ln_ctilde: R,
    /// `C̃δ²d`, or `C̃δ²√d` for separable targets (may be `+∞`).
    pub bound: R,
    pub ln_bound: R,
    pub separable: bool,
}

pub fn bias_bound<R: Real>(
    cert: &RateCertificate<R>,
    params: &Params<R>,
    interval: &SpectralInterval<R>,
    l2: R,
    d: usize,
    separable: bool,
) -> Result<BiasBound<R>, BoundsError> {
    cert.rho_or_err()?;
    if l2 < R::zero() {
        return Err(BoundsError::InvalidArgument("l2 must be >= 0".into()));
    }
    let (m, l) = (interval.m(), interval.l());
    let one_minus_eta_sq = R::one() - params.eta * params.eta;
    let ln_ctilde = (r64::<R>(7.0) * (l + l2) / m).ln()
        + r64::<R>(111.0) * one_minus_eta_sq * l.sqrt() / (params.horizon() * m);
    let dim_factor = if separable { r64::<R>(0.5) } else { R::one() };
    let ln_bound = ln_ctilde + r64::<R>(2.0) * params.delta.ln() + dim_factor * rus::<R>(d).ln();
    Ok(BiasBound {
        l2,
        ctilde: ln_ctilde.exp(),
        ln_ctilde,
        bound: ln_bound.exp(),
        ln_bound,
        separable,
    })
}
