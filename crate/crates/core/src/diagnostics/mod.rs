//! Empirical estimators that confront simulation with the analytics:
//! decay-rate fitting on coupling traces, stationarity moments with
//! batch-means errors, ergodic-average risk over parallel replicas, and
//! exact 1-d empirical Wasserstein distances.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::kernel::{
    run_chain, ChainStream, CouplingTrace, GradientOracle, KernelError, Params, PhaseState,
};
use crate::real::{r64, rus, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Quality flag of a decay fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayFlag {
    Clean,
    /// Every recorded distance was exactly zero (chains coupled from the
    /// start); no rate can be fitted.
    AllZero,
    /// No meaningful decay over the window (periodic or non-contracting
    /// parameters).
    NonDecaying,
}

/// Least-squares exponential decay rate of a coupling trace.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit<R> {
    /// `−slope` of `n ↦ ln dist_M(n)`.
    pub rate_per_transition: R,
    /// `rate_per_transition / K`.
    pub rate_per_gradient: R,
    pub r_squared: R,
    /// First and last transition index used by the fit.
    pub window: (u64, u64),
    pub flag: DecayFlag,
}

/// Ordinary least squares on `(n, ln dist_M(n))` after discarding the first
/// `discard_fraction` of the trace (transient from the non-normal linear
/// part). Needs at least 10 usable points with positive distance.
pub fn fit_decay<R: Real>(
    trace: &CouplingTrace<R>,
    discard_fraction: f64,
) -> Result<DecayFit<R>, DiagnosticsError> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "discard_fraction {discard_fraction} outside [0, 1)"
        )));
    }
    let skip = (trace.steps.len() as f64 * discard_fraction).ceil() as usize;
    let tail = &trace.steps[skip.min(trace.steps.len())..];
    if tail.iter().all(|s| s.dist_m == R::zero()) {
        return Ok(DecayFit {
            rate_per_transition: R::zero(),
            rate_per_gradient: R::zero(),
            r_squared: R::zero(),
            window: (0, 0),
            flag: DecayFlag::AllZero,
        });
    }
    // keep strictly positive distances clear of the subnormal floor
    let floor = r64::<R>(1e-290);
    let pts: Vec<(R, R)> = tail
        .iter()
        .filter(|s| s.dist_m > floor)
        .map(|s| (rus::<R>(s.n as usize), s.dist_m.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(DiagnosticsError::InsufficientData(format!(
            "only {} positive post-discard points (need 10)",
            pts.len()
        )));
    }
    let nf = rus::<R>(pts.len());
    let mean_x = pts.iter().map(|p| p.0).fold(R::zero(), |a, b| a + b) / nf;
    let mean_y = pts.iter().map(|p| p.1).fold(R::zero(), |a, b| a + b) / nf;
    let (mut sxx, mut sxy, mut syy) = (R::zero(), R::zero(), R::zero());
    for &(x, y) in &pts {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == R::zero() {
        R::one()
    } else {
        (sxy * sxy / (sxx * syy)).min(R::one())
    };
    let rate = -slope;
    let flag = if rate <= r64(1e-12) || r_squared < r64(0.25) {
        DecayFlag::NonDecaying
    } else {
        DecayFlag::Clean
    };
    Ok(DecayFit {
        rate_per_transition: rate,
        rate_per_gradient: rate / rus::<R>(trace.k as usize),
        r_squared,
        window: (
            pts.first().unwrap().0.to_f64().unwrap() as u64,
            pts.last().unwrap().0.to_f64().unwrap() as u64,
        ),
        flag,
    })
}

/// Per-coordinate stationary moments with batch-means standard errors.
#[derive(Clone, Copy, Debug)]
pub struct CoordMoments<R> {
    pub mean_x: R,
    pub se_mean_x: R,
    pub var_x: R,
    pub se_var_x: R,
    pub mean_v: R,
    pub se_mean_v: R,
    pub var_v: R,
    pub se_var_v: R,
}

#[derive(Clone, Debug)]
pub struct MomentReport<R> {
    pub coords: Vec<CoordMoments<R>>,
    /// Samples actually used (a multiple of the batch count).
    pub samples: usize,
}

const BATCHES: usize = 50;

#[derive(Clone)]
/// Incremental batch-means moment accumulator (fixed batch size, 50 batches;
/// overflow beyond the nominal capacity accumulates into the last batch).
pub struct RunningMoments<R> {
    d: usize,
    batch_size: usize,
    // per batch, per coordinate: sums and sums of squares of x and v
    sum_x: Vec<R>,
    sum_xx: Vec<R>,
    sum_v: Vec<R>,
    sum_vv: Vec<R>,
    batch_counts: Vec<usize>,
    count: usize,
}

impl<R: Real> RunningMoments<R> {
    pub fn new(d: usize, batch_size: usize) -> Self {
        let len = BATCHES * d;
        Self {
            d,
            batch_size,
            sum_x: vec![R::zero(); len],
            sum_xx: vec![R::zero(); len],
            sum_v: vec![R::zero(); len],
            sum_vv: vec![R::zero(); len],
            batch_counts: vec![0; BATCHES],
            count: 0,
        }
    }

    pub fn push(&mut self, z: &PhaseState<R>) {
        let batch = (self.count / self.batch_size).min(BATCHES - 1);
        let base = batch * self.d;
        for i in 0..self.d {
            let (x, v) = (z.x()[i], z.v()[i]);
            self.sum_x[base + i] += x;
            self.sum_xx[base + i] += x * x;
            self.sum_v[base + i] += v;
            self.sum_vv[base + i] += v * v;
        }
        self.batch_counts[batch] += 1;
        self.count += 1;
    }

    pub fn finish(&self) -> MomentReport<R> {
        let n = rus::<R>(self.count);
        let filled: Vec<usize> = (0..BATCHES).filter(|&b| self.batch_counts[b] > 0).collect();
        let bf = rus::<R>(filled.len());
        let mut coords = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let stats = |sum: &Vec<R>, sumsq: &Vec<R>| {
                let total: R = (0..BATCHES)
                    .map(|b| sum[b * self.d + i])
                    .fold(R::zero(), |a, v| a + v);
                let total_sq: R = (0..BATCHES)
                    .map(|b| sumsq[b * self.d + i])
                    .fold(R::zero(), |a, v| a + v);
                let mean = total / n;
                let var = (total_sq / n - mean * mean).max(R::zero());
                if filled.len() < 2 {
                    return (mean, R::zero(), var, R::zero());
                }
                // spread of per-batch means and per-batch second moments
                // around the global mean
                let mut dev_mean = R::zero();
                let mut batch_vars = Vec::with_capacity(filled.len());
                for &b in &filled {
                    let bs = rus::<R>(self.batch_counts[b]);
                    let bm = sum[b * self.d + i] / bs;
                    dev_mean += (bm - mean) * (bm - mean);
                    let bv = sumsq[b * self.d + i] / bs - r64::<R>(2.0) * mean * bm + mean * mean;
                    batch_vars.push(bv);
                }
                let var_of_batch_var = {
                    let m: R = batch_vars.iter().fold(R::zero(), |a, &v| a + v) / bf;
                    batch_vars
                        .iter()
                        .fold(R::zero(), |a, &v| a + (v - m) * (v - m))
                        / (bf - R::one())
                };
                let se_mean = (dev_mean / (bf - R::one()) / bf).sqrt();
                let se_var = (var_of_batch_var / bf).sqrt();
                (mean, se_mean, var, se_var)
            };
            let (mean_x, se_mean_x, var_x, se_var_x) = stats(&self.sum_x, &self.sum_xx);
            let (mean_v, se_mean_v, var_v, se_var_v) = stats(&self.sum_v, &self.sum_vv);
            coords.push(CoordMoments {
                mean_x,
                se_mean_x,
                var_x,
                se_var_x,
                mean_v,
                se_mean_v,
                var_v,
                se_var_v,
            });
        }
        MomentReport {
            coords,
            samples: self.count,
        }
    }
}

/// Runs a chain from the origin, discards `burn_in` transitions and
/// accumulates `n_samples` post-burn-in states (50 batch-means batches;
/// `n_samples` is rounded down to a multiple of 50).
pub fn stationary_moments<R, O>(
    oracle: &O,
    params: &Params<R>,
    burn_in: u64,
    n_samples: u64,
    stream: &ChainStream,
) -> Result<MomentReport<R>, DiagnosticsError>
where
    R: Real,
    O: GradientOracle<R>,
    StandardNormal: Distribution<R>,
{
    if n_samples < 10_000 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "n_samples = {n_samples} below the 10^4 floor for batch means"
        )));
    }
    let batch_size = (n_samples as usize) / BATCHES;
    let used = batch_size * BATCHES;
    let d = oracle.dim();
    let mut acc = RunningMoments::new(d, batch_size);
    let total = burn_in + used as u64;
    run_chain(
        oracle,
        params,
        &PhaseState::zeros(d),
        total,
        stream,
        |t, z| {
            if t > burn_in {
                acc.push(z);
            }
        },
    )?;
    Ok(acc.finish())
}

/// Mean squared error of an ergodic average over independent replicas, with
/// a jackknife confidence interval.
#[derive(Clone, Copy, Debug)]
pub struct ErgodicRisk<R> {
    pub mse: R,
    pub se: R,
    pub ci_low: R,
    pub ci_high: R,
    pub replicas: usize,
}

/// Runs `replicas` independent chains (parallel, one keyed stream each),
/// averages `observable` over transitions `n0+1 .. n0+n` of each, and
/// reports the mean squared deviation from `reference_value`.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_risk<R, O, F>(
    oracle: &O,
    params: &Params<R>,
    z0: &PhaseState<R>,
    observable: F,
    reference_value: R,
    n: u64,
    n0: u64,
    replicas: usize,
    seed: u64,
) -> Result<ErgodicRisk<R>, DiagnosticsError>
where
    R: Real,
    O: GradientOracle<R>,
    StandardNormal: Distribution<R>,
    F: Fn(&[R]) -> R + Sync,
{
    if replicas < 30 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "replicas = {replicas} below 30"
        )));
    }
    if n == 0 {
        return Err(DiagnosticsError::InvalidArgument("n must be >= 1".into()));
    }
    let deviations: Vec<Result<R, KernelError>> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let stream = ChainStream::new(seed, rep as u64);
            let mut acc = R::zero();
            run_chain(oracle, params, z0, n0 + n, &stream, |t, z| {
                if t > n0 {
                    acc += observable(z.x());
                }
            })?;
            let avg = acc / rus::<R>(n as usize);
            let dev = avg - reference_value;
            Ok(dev * dev)
        })
        .collect();
    let mut sq = Vec::with_capacity(replicas);
    for d in deviations {
        sq.push(d?);
    }
    let rf = rus::<R>(replicas);
    let total: R = sq.iter().fold(R::zero(), |a, &v| a + v);
    let mse = total / rf;
    // jackknife over replicas
    let mut jack_mean = R::zero();
    let jacks: Vec<R> = sq.iter().map(|&v| (total - v) / (rf - R::one())).collect();
    for &j in &jacks {
        jack_mean += j;
    }
    jack_mean /= rf;
    let mut dev = R::zero();
    for &j in &jacks {
        dev += (j - jack_mean) * (j - jack_mean);
    }
    let se = ((rf - R::one()) / rf * dev).sqrt();
    let z95 = r64::<R>(1.959_963_984_540_054);
    Ok(ErgodicRisk {
        mse,
        se,
        ci_low: (mse - z95 * se).max(R::zero()),
        ci_high: mse + z95 * se,
        replicas,
    })
}

/// Exact `W₂` between two equal-size empirical measures on the line:
/// the root mean square gap of the order statistics (inputs are sorted
/// internally).
pub fn empirical_w2_1d<R: Real>(samples_a: &[R], samples_b: &[R]) -> Result<R, DiagnosticsError> {
    if samples_a.len() != samples_b.len() || samples_a.is_empty() {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need equal nonempty sample sizes, got {} and {}",
            samples_a.len(),
            samples_b.len()
        )));
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut s = R::zero();
    for (&x, &y) in a.iter().zip(&b) {
        s += (x - y) * (x - y);
    }
    Ok((s / rus::<R>(a.len())).sqrt())
}
