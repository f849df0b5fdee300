//! Exact convergence analytics for quadratic potentials.
//!
//! On a quadratic mode with curvature `λ` the Verlet leg is an exact rotation
//! in tilted coordinates, so bias, convergence rates, scaling limits and
//! optimal parameters over a curvature class `m ≤ ∇²U ≤ L` all have closed
//! forms. The worst-case rate per gradient evaluation is
//! `ρ = −ln g(h(K, δ), η) / K`, where `h` is the worst cosine envelope over
//! the class and `g` the spectral-radius factor of the one-mode transition.

mod mat2;

pub use mat2::Mat2;

use thiserror::Error;

use crate::kernel::Params;
use crate::real::{r64, rus, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("instability: delta^2 * lambda = {delta_sq_lambda} must stay below 4")]
    Unstable { delta_sq_lambda: f64 },
    #[error("invalid curvature interval: need 0 < m <= L, got m = {m}, L = {l}")]
    InvalidInterval { m: f64, l: f64 },
    #[error("relative tolerance {eps_rel} outside (0, 1]")]
    ToleranceOutOfRange { eps_rel: f64 },
    #[error("precision must be > 0, got {0}")]
    NonpositivePrecision(f64),
    #[error("scaling parameter must be > 0, got {0}")]
    NonpositiveScale(f64),
    #[error("dimension mismatch between mean/precision vectors")]
    DimensionMismatch,
}

/// Curvature class `m ≤ ∇²U ≤ L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralInterval<R> {
    m: R,
    l: R,
}

impl<R: Real> SpectralInterval<R> {
    pub fn new(m: R, l: R) -> Result<Self, GaussianError> {
        if !(m.is_finite() && l.is_finite() && m > R::zero() && l >= m) {
            return Err(GaussianError::InvalidInterval {
                m: m.to_f64().unwrap_or(f64::NAN),
                l: l.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { m, l })
    }

    pub fn m(&self) -> R {
        self.m
    }

    pub fn l(&self) -> R {
        self.l
    }

    /// Condition number `κ = L/m`.
    pub fn kappa(&self) -> R {
        self.l / self.m
    }
}

/// Spectral data of the Verlet map on one quadratic mode: rotation angle
/// `φ = arccos(1 − δ²λ/2)` and modified precision `ν² = λ/(1 − δ²λ/4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerletSpectrum<R> {
    pub lambda: R,
    pub phi: R,
    pub nu_sq: R,
}

impl<R: Real> VerletSpectrum<R> {
    pub fn new(lambda: R, delta: R) -> Result<Self, GaussianError> {
        let phi = phi_angle(lambda, delta)?;
        let nu_sq = modified_precision(lambda, delta)?;
        Ok(Self { lambda, phi, nu_sq })
    }
}

fn check_stable<R: Real>(lambda: R, delta: R) -> Result<(), GaussianError> {
    let u = delta * delta * lambda;
    if u >= r64(4.0) {
        return Err(GaussianError::Unstable {
            delta_sq_lambda: u.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Rotation angle `φ_λ = arccos(1 − δ²λ/2)` of the Verlet map; requires
/// `δ²λ < 4` and lands in `(0, π)`.
pub fn phi_angle<R: Real>(lambda: R, delta: R) -> Result<R, GaussianError> {
    check_stable(lambda, delta)?;
    Ok((R::one() - delta * delta * lambda / r64(2.0)).acos())
}

/// Invariant position-marginal precision `ν² = λ/(1 − δ²λ/4)` of the chain
/// on a mode with curvature `λ`.
pub fn modified_precision<R: Real>(lambda: R, delta: R) -> Result<R, GaussianError> {
    check_stable(lambda, delta)?;
    Ok(lambda / (R::one() - delta * delta * lambda / r64(4.0)))
}

/// `sup |cos|` over `[a, b] ⊂ (0, ∞)`: exactly 1 when the interval contains
/// a multiple of `π`, otherwise attained at an endpoint.
fn sup_abs_cos<R: Real>(a: R, b: R) -> R {
    let pi = R::PI();
    let j = (a / pi).ceil();
    if j * pi <= b {
        return R::one();
    }
    a.cos().abs().max(b.cos().abs())
}

/// Worst cosine envelope `h(K, δ) = sup{|cos(Kφ_λ)| : λ ∈ [m, L]}`.
///
/// `φ` is increasing in `λ`, so the sup is 1 if `[Kφ_m, Kφ_L]` contains a
/// multiple of `π` and an endpoint value otherwise.
pub fn h_envelope<R: Real>(
    params: &Params<R>,
    interval: &SpectralInterval<R>,
) -> Result<R, GaussianError> {
    let k = rus::<R>(params.k as usize);
    let a = k * phi_angle(interval.m, params.delta)?;
    let b = k * phi_angle(interval.l, params.delta)?;
    Ok(sup_abs_cos(a, b))
}

/// Per-transition contraction factor of a single mode:
/// `g(c, η) = η ∨ [ (1+η²)c/2 + √(((1+η²)c/2)² − η²)₊ ]`,
/// the spectral radius of the one-mode transition matrix with `|cos(Kφ)| = c`.
pub fn g_factor<R: Real>(c: R, eta: R) -> R {
    if c >= R::one() {
        return R::one();
    }
    let half = (R::one() + eta * eta) * c / r64(2.0);
    let disc = (half * half - eta * eta).max(R::zero());
    eta.max(half + disc.sqrt())
}

/// Minimizer of `η ↦ g(c, η)`: `η*(c) = (1 − √(1−c²))/c`, extended by 0 at
/// `c = 0`.
pub fn eta_star<R: Real>(c: R) -> R {
    if c == R::zero() {
        return R::zero();
    }
    // = (1 - sqrt(1 - c^2))/c without the cancellation at small c
    c / (R::one() + (R::one() - c * c).max(R::zero()).sqrt())
}

/// Tag for the degenerate (non-converging) parameter region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateRegime {
    Generic,
    /// Some mode in the class is integrated over a half-period multiple:
    /// `h = 1` and the chain does not contract.
    PeriodicDegenerate,
}

/// Worst-case convergence rate per gradient evaluation over the class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussRate<R> {
    /// `−ln g(h, η) / K`; zero exactly in the periodic-degenerate regime.
    pub rho: R,
    pub h: R,
    pub g: R,
    pub regime: RateRegime,
}

/// `ρ(δ, K, η) = −ln g(h(K, δ), η) / K` over `m ≤ ∇²U ≤ L`.
pub fn rate<R: Real>(
    params: &Params<R>,
    interval: &SpectralInterval<R>,
) -> Result<GaussRate<R>, GaussianError> {
    let h = h_envelope(params, interval)?;
    if h >= R::one() {
        return Ok(GaussRate {
            rho: R::zero(),
            h: R::one(),
            g: R::one(),
            regime: RateRegime::PeriodicDegenerate,
        });
    }
    let g = g_factor(h, params.eta);
    let rho = -g.ln() / rus::<R>(params.k as usize);
    Ok(GaussRate {
        rho,
        h,
        g,
        regime: RateRegime::Generic,
    })
}

/// Worst-case `W₂` distance between the target and the invariant position
/// marginal over the class: `ε = √d (1 − √(1 − δ²L/4))/√L`. Independent of
/// `K` and `η`; the boundary `δ²L = 4` is allowed and returns `√(d/L)`.
pub fn epsilon_bias<R: Real>(delta: R, l: R, d: usize) -> Result<R, GaussianError> {
    let u = delta * delta * l / r64(4.0);
    if u > R::one() {
        return Err(GaussianError::Unstable {
            delta_sq_lambda: (u * r64(4.0)).to_f64().unwrap_or(f64::NAN),
        });
    }
    // 1 - sqrt(1-u) = u / (1 + sqrt(1-u)), stable for small u
    let frac = u / (R::one() + (R::one() - u).sqrt());
    Ok(rus::<R>(d).sqrt() * frac / l.sqrt())
}

/// Step size achieving bias tolerance `ε`: the inverse of [`epsilon_bias`],
/// `δ = 2√((1 − (1 − ε√(L/d))²)/L)`. Requires `0 < ε√(L/d) ≤ 1`.
pub fn delta_for_tolerance<R: Real>(epsilon: R, l: R, d: usize) -> Result<R, GaussianError> {
    let eps_rel = epsilon * (l / rus::<R>(d)).sqrt();
    if !(eps_rel > R::zero() && eps_rel <= R::one()) {
        return Err(GaussianError::ToleranceOutOfRange {
            eps_rel: eps_rel.to_f64().unwrap_or(f64::NAN),
        });
    }
    // 1 - (1-e)^2 = e(2-e)
    Ok(r64::<R>(2.0) * (eps_rel * (r64::<R>(2.0) - eps_rel) / l).sqrt())
}

/// One-mode transition `z' = A z + B (G, G')` of the full chain
/// (damping, `K` Verlet rotations, damping) at curvature `λ`.
///
/// With `c = cos(Kφ)`, `s = sin(Kφ)`:
/// `A = [[c, ηs/ν], [−νηs, η²c]]`,
/// `B = √(1−η²) · [[s/ν, 0], [ηc, 1]]`,
/// which leaves `N(0, diag(1/ν², 1))` invariant.
#[derive(Clone, Copy, Debug)]
pub struct TransitionMatrix<R> {
    pub a: Mat2<R>,
    pub b: Mat2<R>,
    pub lambda: R,
    pub params: Params<R>,
    pub spectrum: VerletSpectrum<R>,
}

pub fn transition_matrix<R: Real>(
    lambda: R,
    params: &Params<R>,
) -> Result<TransitionMatrix<R>, GaussianError> {
    let spectrum = VerletSpectrum::new(lambda, params.delta)?;
    let k_phi = rus::<R>(params.k as usize) * spectrum.phi;
    let (c, s) = (k_phi.cos(), k_phi.sin());
    let nu = spectrum.nu_sq.sqrt();
    let eta = params.eta;
    let a = Mat2::new(c, eta * s / nu, -nu * eta * s, eta * eta * c);
    let w = (R::one() - eta * eta).sqrt();
    let b = Mat2::new(w * s / nu, R::zero(), w * eta * c, w);
    Ok(TransitionMatrix {
        a,
        b,
        lambda,
        params: *params,
        spectrum,
    })
}

/// Operator norm of `Aⁿ`: the exact worst-case `W₂` contraction factor of
/// the one-mode chain after `n` transitions.
pub fn contraction_factor<R: Real>(a: &Mat2<R>, n: u32) -> R {
    a.pow(n).operator_norm()
}

/// Limit rate (per unit rescaled time) when `Kδ → T` with fixed `η`:
/// `ρ̄ = |ln g(h*(T), η)| / (T√L)` with
/// `h*(T) = sup{|cos x| : x ∈ [T√m, T√L]}`.
pub fn hmc_scaling_rate<R: Real>(
    t: R,
    eta: R,
    interval: &SpectralInterval<R>,
) -> Result<R, GaussianError> {
    if !(t > R::zero()) {
        return Err(GaussianError::NonpositiveScale(
            t.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let h = sup_abs_cos(t * interval.m.sqrt(), t * interval.l.sqrt());
    if h >= R::one() {
        return Ok(R::zero());
    }
    Ok(g_factor(h, eta).ln().abs() / (t * interval.l.sqrt()))
}

/// Limit rate when `K = 1` and `1 − η ≈ γδ`:
/// `ρ̄ = (γ − √((γ² − m)₊)) / √L`.
pub fn langevin_scaling_rate<R: Real>(
    gamma: R,
    interval: &SpectralInterval<R>,
) -> Result<R, GaussianError> {
    if !(gamma > R::zero()) {
        return Err(GaussianError::NonpositiveScale(
            gamma.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let excess = (gamma * gamma - interval.m).max(R::zero());
    Ok((gamma - excess.sqrt()) / interval.l.sqrt())
}

/// Best parameter triple for a given class and bias tolerance, with its
/// predicted rate.
#[derive(Clone, Copy, Debug)]
pub struct OptimalChoice<R> {
    pub params: Params<R>,
    pub predicted: GaussRate<R>,
}

/// Rate-optimal `(δ, K, η)` for tolerance `ε` in dimension `d`:
/// `δ` from [`delta_for_tolerance`], `K = ⌊π/(δ√L (1 + 1/√κ))⌋ ∨ 1`,
/// `η = (1 − sin(π/(1+√κ)))/cos(π/(1+√κ))` (continuously extended to 0 at
/// `κ = 1`).
pub fn optimal_params<R: Real>(
    interval: &SpectralInterval<R>,
    epsilon: R,
    d: usize,
) -> Result<OptimalChoice<R>, GaussianError> {
    let delta = delta_for_tolerance(epsilon, interval.l, d)?;
    let kappa = interval.kappa();
    let x = R::PI() / (R::one() + kappa.sqrt());
    // (1 - sin x)/cos x = tan(pi/4 - x/2), finite at x = pi/2 (kappa = 1)
    let eta = (R::FRAC_PI_4() - x / r64(2.0)).tan();
    let k_real = R::PI() / (delta * interval.l.sqrt() * (R::one() + R::one() / kappa.sqrt()));
    let k = if k_real < r64(1.0) {
        1
    } else {
        k_real.floor().to_f64().unwrap() as u32
    };
    let params = Params { delta, k, eta };
    let predicted = rate(&params, interval)?;
    Ok(OptimalChoice { params, predicted })
}

/// Outcome of the fixed-step optimal-`K` search.
#[derive(Clone, Copy, Debug)]
pub struct FixedDeltaOptimum<R> {
    /// `K* = 1 + ⌊π/(φ_m + φ_L)⌋`.
    pub k_star: u32,
    /// Whether `2φ_m < φ_L ≤ π/2` held; outside it the result comes from an
    /// exhaustive scan.
    pub in_precondition: bool,
    /// Argmax of `K ↦ ρ(δ, K, η*(h))` with its damping and rate.
    pub best_k: u32,
    pub best_eta: R,
    pub best_rho: R,
    /// Argmax of the `η = 0` restriction.
    pub best_k_eta0: u32,
    pub best_rho_eta0: R,
}

/// Optimal number of Verlet steps at a fixed step size.
///
/// Under `2φ_m < φ_L ≤ π/2` the maximum of `K ↦ ρ(δ, K, η*(h(K, δ)))` is
/// attained at `K* − 1` or `K*`; both candidates are evaluated. Outside the
/// precondition the whole range `K ∈ [1, ⌈2π/φ_m⌉]` is scanned (beyond it
/// the envelope is pinned at 1).
pub fn optimal_k_fixed_delta<R: Real>(
    delta: R,
    interval: &SpectralInterval<R>,
) -> Result<FixedDeltaOptimum<R>, GaussianError> {
    let phi_m = phi_angle(interval.m, delta)?;
    let phi_l = phi_angle(interval.l, delta)?;
    let k_star_f = (R::PI() / (phi_m + phi_l)).floor().to_f64().unwrap() + 1.0;
    let k_star = k_star_f as u32;
    let in_precondition = r64::<R>(2.0) * phi_m < phi_l && phi_l <= R::FRAC_PI_2();

    let candidates: Vec<u32> = if in_precondition {
        if k_star > 1 {
            vec![k_star - 1, k_star]
        } else {
            vec![1]
        }
    } else {
        let k_max = (r64::<R>(2.0) * R::PI() / phi_m).ceil().to_f64().unwrap() as u32;
        (1..=k_max.max(1)).collect()
    };

    let mut best: Option<(u32, R, R)> = None;
    let mut best0: Option<(u32, R)> = None;
    for &k in &candidates {
        let h = h_envelope(
            &Params {
                delta,
                k,
                eta: R::zero(),
            },
            interval,
        )?;
        let eta = eta_star(h);
        let tuned = rate(&Params { delta, k, eta }, interval)?;
        if best.is_none_or(|(_, _, r)| tuned.rho > r) {
            best = Some((k, eta, tuned.rho));
        }
        let plain = rate(
            &Params {
                delta,
                k,
                eta: R::zero(),
            },
            interval,
        )?;
        if best0.is_none_or(|(_, r)| plain.rho > r) {
            best0 = Some((k, plain.rho));
        }
    }
    let (best_k, best_eta, best_rho) = best.unwrap();
    let (best_k_eta0, best_rho_eta0) = best0.unwrap();
    Ok(FixedDeltaOptimum {
        k_star,
        in_precondition,
        best_k,
        best_eta,
        best_rho,
        best_k_eta0,
        best_rho_eta0,
    })
}

/// `W₂` distance between centered 1-d Gaussians given by their precisions:
/// `|1/√p₁ − 1/√p₂|`.
pub fn w2_gaussian_1d<R: Real>(prec1: R, prec2: R) -> Result<R, GaussianError> {
    for p in [prec1, prec2] {
        if !(p > R::zero()) {
            return Err(GaussianError::NonpositivePrecision(
                p.to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    Ok((R::one() / prec1.sqrt() - R::one() / prec2.sqrt()).abs())
}

/// `W₂` distance between Gaussians with diagonal covariances: squared mean
/// offsets and squared standard-deviation gaps summed across coordinates.
pub fn w2_gaussian_diag<R: Real>(
    mean1: &[R],
    prec1: &[R],
    mean2: &[R],
    prec2: &[R],
) -> Result<R, GaussianError> {
    let d = mean1.len();
    if prec1.len() != d || mean2.len() != d || prec2.len() != d {
        return Err(GaussianError::DimensionMismatch);
    }
    let mut s = R::zero();
    for i in 0..d {
        let gap = w2_gaussian_1d(prec1[i], prec2[i])?;
        let off = mean1[i] - mean2[i];
        s += off * off + gap * gap;
    }
    Ok(s.sqrt())
}
