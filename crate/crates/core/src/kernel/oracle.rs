//! Force models `b(x, θ)` with certified curvature bounds `m ≤ ∇_x b ≤ L`.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::KernelError;
use crate::real::{r64, rus, Real};

/// A (possibly stochastic) drift estimator with uniform curvature bounds:
/// for every auxiliary value `θ`, the Jacobian of `x ↦ b(x, θ)` satisfies
/// `m|u|² ≤ u·∇b u` and `|∇b u| ≤ L|u|`.
pub trait GradientOracle<R: Real>: Sync {
    /// Auxiliary randomness consumed by one evaluation (`()` when deterministic).
    type Aux: Clone + Send + Sync;

    fn dim(&self) -> usize;

    /// Certified curvature bounds `(m, L)`.
    fn curvature_bounds(&self) -> (R, R);

    fn is_deterministic(&self) -> bool;

    fn sample_aux(&self, rng: &mut ChaCha8Rng) -> Self::Aux;

    /// Writes `b(x, θ)` into `out`.
    fn force_into(&self, x: &[R], aux: &Self::Aux, out: &mut [R]);
}

/// Linear force `b(x) = S x` for a diagonal `S` with entries in `[m, L]`.
#[derive(Clone, Debug)]
pub struct QuadraticOracle<R> {
    diag: Vec<R>,
    m: R,
    l: R,
}

impl<R: Real> QuadraticOracle<R> {
    pub fn new(diag: Vec<R>) -> Result<Self, KernelError> {
        if diag.is_empty() {
            return Err(KernelError::InvalidOracle("empty spectrum".into()));
        }
        let mut m = R::infinity();
        let mut l = R::zero();
        for &s in &diag {
            if !(s.is_finite() && s > R::zero()) {
                return Err(KernelError::InvalidOracle(format!(
                    "spectrum entries must be > 0, got {s}"
                )));
            }
            m = m.min(s);
            l = l.max(s);
        }
        Ok(Self { diag, m, l })
    }

    pub fn isotropic(lambda: R, d: usize) -> Result<Self, KernelError> {
        Self::new(vec![lambda; d])
    }

    pub fn spectrum(&self) -> &[R] {
        &self.diag
    }
}

impl<R: Real> GradientOracle<R> for QuadraticOracle<R> {
    type Aux = ();

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn curvature_bounds(&self) -> (R, R) {
        (self.m, self.l)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn sample_aux(&self, _rng: &mut ChaCha8Rng) -> Self::Aux {}

    fn force_into(&self, x: &[R], _aux: &Self::Aux, out: &mut [R]) {
        for i in 0..x.len() {
            out[i] = self.diag[i] * x[i];
        }
    }
}

/// Non-Gaussian test force `b(x)_i = x_i + α·tanh(x_i)` with `α ≥ 0`.
///
/// The Jacobian is `I + α·diag(sech²)`, so the curvature bounds `m = 1`,
/// `L = 1 + α` are exact and require no numerics.
#[derive(Clone, Debug)]
pub struct PerturbedQuadraticOracle<R> {
    alpha: R,
    dim: usize,
}

impl<R: Real> PerturbedQuadraticOracle<R> {
    pub fn new(alpha: R, dim: usize) -> Result<Self, KernelError> {
        if !(alpha.is_finite() && alpha >= R::zero()) {
            return Err(KernelError::InvalidOracle(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if dim == 0 {
            return Err(KernelError::InvalidOracle("dim must be >= 1".into()));
        }
        Ok(Self { alpha, dim })
    }
}

impl<R: Real> GradientOracle<R> for PerturbedQuadraticOracle<R> {
    type Aux = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn curvature_bounds(&self) -> (R, R) {
        (R::one(), R::one() + self.alpha)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn sample_aux(&self, _rng: &mut ChaCha8Rng) -> Self::Aux {}

    fn force_into(&self, x: &[R], _aux: &Self::Aux, out: &mut [R]) {
        for i in 0..x.len() {
            out[i] = x[i] + self.alpha * x[i].tanh();
        }
    }
}

/// Mini-batch least-squares force:
/// `b(x, θ) = (N/n) Σ_{i∈θ} ∇U_i(x)` with `U_i(x) = ‖A_i x − y_i‖²` and `θ`
/// a uniform size-`n` subset of the `N` terms. Unbiased for `∇ Σ_i U_i`.
///
/// `(m, L)` are the extreme eigenvalues over all per-batch Hessians
/// `(N/n) Σ_{i∈θ} 2 A_iᵀA_i`, found by enumerating the subsets.
#[derive(Clone, Debug)]
pub struct MiniBatchLsqOracle<R> {
    /// Per-term design matrices, row-major `rows × dim`.
    mats: Vec<Vec<R>>,
    /// Per-term targets, length `rows`.
    ys: Vec<Vec<R>>,
    rows: usize,
    dim: usize,
    batch: usize,
    m: R,
    l: R,
}

impl<R: Real> MiniBatchLsqOracle<R> {
    /// `mats[i]` is `A_i` (row-major, `rows × dim`, injective), `ys[i]` its target.
    pub fn new(
        mats: Vec<Vec<R>>,
        ys: Vec<Vec<R>>,
        rows: usize,
        dim: usize,
        batch: usize,
    ) -> Result<Self, KernelError> {
        let n_terms = mats.len();
        if n_terms == 0 || ys.len() != n_terms {
            return Err(KernelError::InvalidOracle(
                "need matching nonempty term lists".into(),
            ));
        }
        if batch == 0 || batch > n_terms {
            return Err(KernelError::InvalidOracle(format!(
                "batch size {batch} outside [1, {n_terms}]"
            )));
        }
        if rows < dim || dim == 0 {
            return Err(KernelError::InvalidOracle(
                "need rows >= dim >= 1 for injective terms".into(),
            ));
        }
        for (i, a) in mats.iter().enumerate() {
            if a.len() != rows * dim {
                return Err(KernelError::InvalidOracle(format!(
                    "term {i}: matrix must be rows*dim"
                )));
            }
            if ys[i].len() != rows {
                return Err(KernelError::InvalidOracle(format!(
                    "term {i}: target must have {rows} entries"
                )));
            }
        }
        let n_subsets = binomial(n_terms, batch);
        if n_subsets > 1_000_000 {
            return Err(KernelError::InvalidOracle(format!(
                "{n_subsets} mini-batch subsets exceed the enumeration cap"
            )));
        }

        let mut oracle = Self {
            mats,
            ys,
            rows,
            dim,
            batch,
            m: R::zero(),
            l: R::zero(),
        };
        let (mut m, mut l) = (R::infinity(), R::zero());
        let mut hess = vec![R::zero(); dim * dim];
        for subset in Combinations::new(n_terms, batch) {
            oracle.batch_hessian(&subset, &mut hess);
            let (lo, hi) = sym_eigen_extremes(&hess, dim);
            m = m.min(lo);
            l = l.max(hi);
        }
        if !(m > R::zero()) {
            return Err(KernelError::InvalidOracle(format!(
                "per-batch Hessians are not uniformly positive definite (min eigenvalue {m})"
            )));
        }
        oracle.m = m;
        oracle.l = l;
        Ok(oracle)
    }

    /// Deterministic synthetic instance: `A_i = I-block + scale·G_i`, `y_i = scale·g_i`,
    /// generated from a keyed stream so that configurations are reproducible.
    pub fn synthetic(
        n_terms: usize,
        batch: usize,
        rows: usize,
        dim: usize,
        scale: R,
        data_seed: u64,
    ) -> Result<Self, KernelError>
    where
        rand_distr::StandardNormal: rand_distr::Distribution<R>,
    {
        use super::rng::{ChainStream, SETUP_TRANSITION};
        let stream = ChainStream::new(data_seed, 0);
        let mut mats = Vec::with_capacity(n_terms);
        let mut ys = Vec::with_capacity(n_terms);
        for i in 0..n_terms {
            let mut rng = stream.rng(SETUP_TRANSITION, i as u64);
            let g = super::rng::standard_normal_vec::<R>(&mut rng, rows * dim + rows);
            let mut a = vec![R::zero(); rows * dim];
            for r in 0..rows {
                for c in 0..dim {
                    let eye = if r % dim == c { R::one() } else { R::zero() };
                    a[r * dim + c] = eye + scale * g[r * dim + c];
                }
            }
            let y: Vec<R> = (0..rows).map(|r| scale * g[rows * dim + r]).collect();
            mats.push(a);
            ys.push(y);
        }
        Self::new(mats, ys, rows, dim, batch)
    }

    pub fn n_terms(&self) -> usize {
        self.mats.len()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// `(N/n) Σ_{i∈θ} 2 A_iᵀ A_i`, written into `out` (dim×dim, row-major).
    fn batch_hessian(&self, subset: &[usize], out: &mut [R]) {
        let d = self.dim;
        let w = rus::<R>(self.n_terms()) / rus::<R>(self.batch);
        for o in out.iter_mut() {
            *o = R::zero();
        }
        for &i in subset {
            let a = &self.mats[i];
            for r in 0..self.rows {
                let row = &a[r * d..(r + 1) * d];
                for p in 0..d {
                    let wrp = r64::<R>(2.0) * w * row[p];
                    for q in 0..d {
                        out[p * d + q] += wrp * row[q];
                    }
                }
            }
        }
    }

    fn batch_force(&self, x: &[R], subset: &[usize], out: &mut [R]) {
        let d = self.dim;
        let w = rus::<R>(self.n_terms()) / rus::<R>(self.batch);
        for o in out.iter_mut() {
            *o = R::zero();
        }
        // ∇U_i(x) = 2 A_iᵀ (A_i x − y_i)
        for &i in subset {
            let a = &self.mats[i];
            let y = &self.ys[i];
            for r in 0..self.rows {
                let row = &a[r * d..(r + 1) * d];
                let mut res = -y[r];
                for c in 0..d {
                    res += row[c] * x[c];
                }
                let wres = r64::<R>(2.0) * w * res;
                for c in 0..d {
                    out[c] += wres * row[c];
                }
            }
        }
    }

    /// Exact mean force `∇ Σ_i U_i(x)`, i.e. the average of `b(x, ·)` over subsets.
    pub fn full_force(&self, x: &[R], out: &mut [R]) {
        let all: Vec<usize> = (0..self.n_terms()).collect();
        // weight N/n with n = N collapses to 1, so reuse batch_force on the full set
        let d = self.dim;
        let mut tmp = vec![R::zero(); d];
        for o in out.iter_mut() {
            *o = R::zero();
        }
        for &i in &all {
            self.batch_force_single(i, x, &mut tmp);
            for c in 0..d {
                out[c] += tmp[c];
            }
        }
    }

    fn batch_force_single(&self, i: usize, x: &[R], out: &mut [R]) {
        let d = self.dim;
        let a = &self.mats[i];
        let y = &self.ys[i];
        for o in out.iter_mut() {
            *o = R::zero();
        }
        for r in 0..self.rows {
            let row = &a[r * d..(r + 1) * d];
            let mut res = -y[r];
            for c in 0..d {
                res += row[c] * x[c];
            }
            let wres = r64::<R>(2.0) * res;
            for c in 0..d {
                out[c] += wres * row[c];
            }
        }
    }

    /// Average of `b(x, θ)` over every size-`n` subset (exact enumeration).
    pub fn subset_mean_force(&self, x: &[R]) -> Vec<R> {
        let d = self.dim;
        let mut acc = vec![R::zero(); d];
        let mut tmp = vec![R::zero(); d];
        let mut count = 0usize;
        for subset in Combinations::new(self.n_terms(), self.batch) {
            self.batch_force(x, &subset, &mut tmp);
            for c in 0..d {
                acc[c] += tmp[c];
            }
            count += 1;
        }
        for c in 0..d {
            acc[c] /= rus(count);
        }
        acc
    }

    /// Exact `E_θ |b(x, θ)|²` by subset enumeration.
    pub fn second_moment(&self, x: &[R]) -> R {
        let d = self.dim;
        let mut tmp = vec![R::zero(); d];
        let mut acc = R::zero();
        let mut count = 0usize;
        for subset in Combinations::new(self.n_terms(), self.batch) {
            self.batch_force(x, &subset, &mut tmp);
            let mut s = R::zero();
            for c in 0..d {
                s += tmp[c] * tmp[c];
            }
            acc += s;
            count += 1;
        }
        acc / rus(count)
    }

    /// Least-squares solution `x̂` of `Σ_i A_iᵀA_i x = Σ_i A_iᵀ y_i`
    /// (the zero of the mean force).
    pub fn least_squares_solution(&self) -> Vec<R> {
        let d = self.dim;
        let mut lhs = vec![R::zero(); d * d];
        let mut rhs = vec![R::zero(); d];
        for i in 0..self.n_terms() {
            let a = &self.mats[i];
            let y = &self.ys[i];
            for r in 0..self.rows {
                let row = &a[r * d..(r + 1) * d];
                for p in 0..d {
                    for q in 0..d {
                        lhs[p * d + q] += row[p] * row[q];
                    }
                    rhs[p] += row[p] * y[r];
                }
            }
        }
        solve_spd(&mut lhs, &mut rhs, d);
        rhs
    }

    /// Grid-minimized second moment around the least-squares solution;
    /// a floor for `inf_x E_θ|b(x, θ)|²`.
    pub fn nb_floor(&self) -> R {
        let center = self.least_squares_solution();
        let mut best = self.second_moment(&center);
        let steps = [-0.1, -0.05, 0.05, 0.1];
        let mut probe = center.clone();
        for c in 0..self.dim {
            for &s in &steps {
                probe.copy_from_slice(&center);
                probe[c] += r64::<R>(s);
                best = best.min(self.second_moment(&probe));
            }
        }
        best
    }
}

impl<R: Real> GradientOracle<R> for MiniBatchLsqOracle<R> {
    /// Sorted indices of the terms in the mini-batch.
    type Aux = Vec<usize>;

    fn dim(&self) -> usize {
        self.dim
    }

    fn curvature_bounds(&self) -> (R, R) {
        (self.m, self.l)
    }

    fn is_deterministic(&self) -> bool {
        self.batch == self.n_terms()
    }

    fn sample_aux(&self, rng: &mut ChaCha8Rng) -> Self::Aux {
        let mut idx = index::sample(rng, self.n_terms(), self.batch).into_vec();
        idx.sort_unstable();
        idx
    }

    fn force_into(&self, x: &[R], aux: &Self::Aux, out: &mut [R]) {
        self.batch_force(x, aux, out);
    }
}

/// Wraps an oracle and counts force evaluations (for gradient budgets).
pub struct CountingOracle<'a, O> {
    inner: &'a O,
    count: AtomicU64,
}

impl<'a, O> CountingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl<'a, R: Real, O: GradientOracle<R>> GradientOracle<R> for CountingOracle<'a, O> {
    type Aux = O::Aux;

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn curvature_bounds(&self) -> (R, R) {
        self.inner.curvature_bounds()
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn sample_aux(&self, rng: &mut ChaCha8Rng) -> Self::Aux {
        self.inner.sample_aux(rng)
    }

    fn force_into(&self, x: &[R], aux: &Self::Aux, out: &mut [R]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.force_into(x, aux, out);
    }
}

/// Checks the curvature bounds by central finite differences along random
/// directions: `u·(∇b u)` must lie in `[m − tol, L + tol]` for unit `u`,
/// with step `1e-5·(1 + |x|)` and tolerance `1e-6` relative to `max(1, L)`.
pub fn validate_curvature<R, O>(
    oracle: &O,
    rng: &mut ChaCha8Rng,
    probes: usize,
) -> Result<(), KernelError>
where
    R: Real,
    O: GradientOracle<R>,
    rand_distr::StandardNormal: rand_distr::Distribution<R>,
{
    use super::rng::standard_normal_vec;
    let d = oracle.dim();
    let (m, l) = oracle.curvature_bounds();
    let tol = r64::<R>(1e-6) * R::one().max(l);
    let mut fp = vec![R::zero(); d];
    let mut fm = vec![R::zero(); d];
    for probe in 0..probes {
        let x = standard_normal_vec::<R>(rng, d);
        let mut u = standard_normal_vec::<R>(rng, d);
        let nu = u.iter().fold(R::zero(), |s, &c| s + c * c).sqrt();
        if nu == R::zero() {
            continue;
        }
        for c in u.iter_mut() {
            *c /= nu;
        }
        let nx = x.iter().fold(R::zero(), |s, &c| s + c * c).sqrt();
        let h = r64::<R>(1e-5) * (R::one() + nx);
        let aux = oracle.sample_aux(rng);
        let xp: Vec<R> = x.iter().zip(&u).map(|(&a, &b)| a + h * b).collect();
        let xm: Vec<R> = x.iter().zip(&u).map(|(&a, &b)| a - h * b).collect();
        oracle.force_into(&xp, &aux, &mut fp);
        oracle.force_into(&xm, &aux, &mut fm);
        let mut quad = R::zero();
        for c in 0..d {
            quad += u[c] * (fp[c] - fm[c]);
        }
        quad /= r64::<R>(2.0) * h;
        if quad < m - tol || quad > l + tol {
            return Err(KernelError::CurvatureOutOfBounds {
                value: quad.to_f64().unwrap_or(f64::NAN),
                lo: (m - tol).to_f64().unwrap_or(f64::NAN),
                hi: (l + tol).to_f64().unwrap_or(f64::NAN),
                probe,
            });
        }
    }
    Ok(())
}

/// Iterator over all size-`k` subsets of `{0, .., n-1}` in lexicographic order.
pub(crate) struct Combinations {
    n: usize,
    k: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item = self.current.clone();
        // advance
        let mut i = self.k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - self.k + i {
                self.current[i] += 1;
                for j in i + 1..self.k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(item)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Smallest and largest eigenvalue of a symmetric matrix (cyclic Jacobi).
fn sym_eigen_extremes<R: Real>(mat: &[R], d: usize) -> (R, R) {
    let mut a = mat.to_vec();
    let tol = r64::<R>(1e-14);
    for _sweep in 0..100 {
        let mut off = R::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        let scale = (0..d).fold(R::zero(), |s, i| s + a[i * d + i].abs());
        if off.sqrt() <= tol * (R::one() + scale) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == R::zero() {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (r64::<R>(2.0) * apq);
                let t = {
                    let s = if theta >= R::zero() {
                        R::one()
                    } else {
                        -R::one()
                    };
                    s / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for i in 0..d {
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for i in 0..d {
                    let api = a[p * d + i];
                    let aqi = a[q * d + i];
                    a[p * d + i] = c * api - s * aqi;
                    a[q * d + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut lo = R::infinity();
    let mut hi = R::neg_infinity();
    for i in 0..d {
        lo = lo.min(a[i * d + i]);
        hi = hi.max(a[i * d + i]);
    }
    (lo, hi)
}

/// In-place solve of `lhs · x = rhs` for symmetric positive definite `lhs`
/// (Gaussian elimination with partial pivoting; `d` is small here).
fn solve_spd<R: Real>(lhs: &mut [R], rhs: &mut [R], d: usize) {
    for col in 0..d {
        let mut piv = col;
        for r in (col + 1)..d {
            if lhs[r * d + col].abs() > lhs[piv * d + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..d {
                lhs.swap(col * d + c, piv * d + c);
            }
            rhs.swap(col, piv);
        }
        let diag = lhs[col * d + col];
        for r in (col + 1)..d {
            let f = lhs[r * d + col] / diag;
            for c in col..d {
                let v = lhs[col * d + c];
                lhs[r * d + c] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    for col in (0..d).rev() {
        let mut s = rhs[col];
        for c in (col + 1)..d {
            s -= lhs[col * d + c] * rhs[c];
        }
        rhs[col] = s / lhs[col * d + col];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng::ChainStream;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_bounds_from_spectrum() {
        let o = QuadraticOracle::new(vec![1.0, 4.0, 2.5]).unwrap();
        assert_eq!(o.curvature_bounds(), (1.0, 4.0));
        let mut out = vec![0.0; 3];
        o.force_into(&[1.0, 1.0, 2.0], &(), &mut out);
        assert_eq!(out, vec![1.0, 4.0, 5.0]);
    }

    #[test]
    fn perturbed_curvature_is_certified() {
        let o = PerturbedQuadraticOracle::new(0.3, 4).unwrap();
        assert_eq!(o.curvature_bounds(), (1.0, 1.3));
        let mut rng = ChainStream::new(5, 0).rng(0, 0);
        validate_curvature(&o, &mut rng, 50).unwrap();
    }

    #[test]
    fn quadratic_curvature_is_certified() {
        let o = QuadraticOracle::new(vec![0.5, 2.0]).unwrap();
        let mut rng = ChainStream::new(6, 0).rng(0, 0);
        validate_curvature(&o, &mut rng, 50).unwrap();
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let all: Vec<_> = Combinations::new(5, 2).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[9], vec![3, 4]);
    }

    #[test]
    fn jacobi_matches_known_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let (lo, hi) = sym_eigen_extremes(&[2.0, 1.0, 1.0, 2.0], 2);
        assert_relative_eq!(lo, 1.0, max_relative = 1e-12);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn minibatch_mean_force_is_full_gradient() {
        let o = MiniBatchLsqOracle::<f64>::synthetic(6, 2, 3, 3, 0.05, 11).unwrap();
        let x = vec![0.3, -0.7, 1.1];
        let mean = o.subset_mean_force(&x);
        let mut full = vec![0.0; 3];
        o.full_force(&x, &mut full);
        for c in 0..3 {
            assert_relative_eq!(mean[c], full[c], epsilon = 1e-10);
        }
    }

    #[test]
    fn minibatch_curvature_within_bounds_per_theta() {
        let o = MiniBatchLsqOracle::<f64>::synthetic(6, 2, 3, 3, 0.05, 11).unwrap();
        let mut rng = ChainStream::new(8, 0).rng(0, 0);
        validate_curvature(&o, &mut rng, 50).unwrap();
    }

    #[test]
    fn least_squares_solution_zeroes_mean_force() {
        let o = MiniBatchLsqOracle::<f64>::synthetic(5, 2, 4, 3, 0.1, 3).unwrap();
        let xs = o.least_squares_solution();
        let mut f = vec![0.0; 3];
        o.full_force(&xs, &mut f);
        for c in 0..3 {
            assert!(f[c].abs() < 1e-10, "residual force {}", f[c]);
        }
        // nb floor is attained near the solution
        let nb = o.nb_floor();
        assert!(nb >= 0.0 && nb <= o.second_moment(&xs));
    }
}
