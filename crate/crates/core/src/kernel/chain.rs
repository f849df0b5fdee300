//! Step maps and chain runners.

use rand_distr::{Distribution, StandardNormal};

use super::rng::{stage, standard_normal_vec, ChainStream};
use super::{GradientOracle, KernelError, Params, PhaseState};
use crate::bounds::MetricMatrix;
use crate::real::Real;

/// One position-Verlet step of size `δ`:
/// evaluates the force once at the midpoint `x + (δ/2)v` and returns
/// `(x + δv − (δ²/2)b, v − δb)`.
pub fn verlet_step<R, O>(
    oracle: &O,
    aux: &O::Aux,
    delta: R,
    z: &PhaseState<R>,
) -> Result<PhaseState<R>, KernelError>
where
    R: Real,
    O: GradientOracle<R>,
{
    let d = z.dim();
    if oracle.dim() != d {
        return Err(KernelError::DimensionMismatch {
            expected: oracle.dim(),
            got: d,
        });
    }
    let half = delta / crate::real::r64(2.0);
    let mid: Vec<R> = (0..d).map(|i| z.x()[i] + half * z.v()[i]).collect();
    let mut force = vec![R::zero(); d];
    oracle.force_into(&mid, aux, &mut force);
    for (i, f) in force.iter().enumerate() {
        if !f.is_finite() {
            return Err(KernelError::NonFiniteForce { coordinate: i });
        }
    }
    let mut x = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    for i in 0..d {
        x.push(z.x()[i] + delta * z.v()[i] - half * delta * force[i]);
        v.push(z.v()[i] - delta * force[i]);
    }
    for i in 0..d {
        if !x[i].is_finite() {
            return Err(KernelError::NonFiniteState { coordinate: i });
        }
        if !v[i].is_finite() {
            return Err(KernelError::NonFiniteState { coordinate: d + i });
        }
    }
    Ok(PhaseState::from_parts_unchecked(x, v))
}

/// Autoregressive velocity refreshment `v ← ηv + √(1−η²) g`; the position
/// is untouched.
pub fn damping_step<R: Real>(
    eta: R,
    z: &PhaseState<R>,
    g: &[R],
) -> Result<PhaseState<R>, KernelError> {
    let d = z.dim();
    if g.len() != d {
        return Err(KernelError::DimensionMismatch {
            expected: d,
            got: g.len(),
        });
    }
    let noise_scale = (R::one() - eta * eta).sqrt();
    let v: Vec<R> = (0..d)
        .map(|i| eta * z.v()[i] + noise_scale * g[i])
        .collect();
    Ok(PhaseState::from_parts_unchecked(z.x().to_vec(), v))
}

/// Deterministic core of one transition: damping with `g_in`, then one
/// Verlet step per entry of `auxs`, then damping with `g_out`.
pub fn transition_with_noise<R, O>(
    oracle: &O,
    params: &Params<R>,
    z: &PhaseState<R>,
    g_in: &[R],
    auxs: &[O::Aux],
    g_out: &[R],
) -> Result<PhaseState<R>, KernelError>
where
    R: Real,
    O: GradientOracle<R>,
{
    if auxs.len() != params.k as usize {
        return Err(KernelError::DimensionMismatch {
            expected: params.k as usize,
            got: auxs.len(),
        });
    }
    let mut cur = damping_step(params.eta, z, g_in)?;
    for aux in auxs {
        cur = verlet_step(oracle, aux, params.delta, &cur)?;
    }
    damping_step(params.eta, &cur, g_out)
}

/// One full transition, drawing its two Gaussian vectors and `K` auxiliary
/// values from the `(transition, stage)` slots of `stream`.
pub fn transition<R, O>(
    oracle: &O,
    params: &Params<R>,
    z: &PhaseState<R>,
    stream: &ChainStream,
    t: u64,
) -> Result<PhaseState<R>, KernelError>
where
    R: Real,
    O: GradientOracle<R>,
    StandardNormal: Distribution<R>,
{
    let d = z.dim();
    let g_in = standard_normal_vec::<R>(&mut stream.rng(t, stage::DAMP_IN), d);
    let g_out = standard_normal_vec::<R>(&mut stream.rng(t, stage::DAMP_OUT), d);
    let auxs: Vec<O::Aux> = (0..params.k)
        .map(|k| oracle.sample_aux(&mut stream.rng(t, stage::AUX_BASE + k as u64)))
        .collect();
    transition_with_noise(oracle, params, z, &g_in, &auxs, &g_out)
}

/// Bookkeeping returned by [`run_chain`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunStats {
    pub transitions: u64,
    pub grad_evals: u64,
}

/// Runs `n` transitions from `z0`, invoking `observer(t, state)` on the
/// initial state (`t = 0`) and after every transition.
pub fn run_chain<R, O, F>(
    oracle: &O,
    params: &Params<R>,
    z0: &PhaseState<R>,
    n: u64,
    stream: &ChainStream,
    mut observer: F,
) -> Result<(PhaseState<R>, RunStats), KernelError>
where
    R: Real,
    O: GradientOracle<R>,
    StandardNormal: Distribution<R>,
    F: FnMut(u64, &PhaseState<R>),
{
    observer(0, z0);
    let mut z = z0.clone();
    for t in 0..n {
        z = transition(oracle, params, &z, stream, t)?;
        observer(t + 1, &z);
    }
    let stats = RunStats {
        transitions: n,
        grad_evals: n * params.k as u64,
    };
    Ok((z, stats))
}

/// One record of a coupled run: transition index and the two distances
/// between the chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingStep<R> {
    pub n: u64,
    pub dist_euclid: R,
    pub dist_m: R,
}

/// Distance trace of a synchronous coupling.
#[derive(Clone, Debug)]
pub struct CouplingTrace<R> {
    /// Verlet steps per transition of the generating chains.
    pub k: u32,
    pub steps: Vec<CouplingStep<R>>,
}

/// Runs two chains driven by identical noise (same Gaussian vectors, same
/// auxiliary draws) and records their Euclidean and `M`-norm distances at
/// every transition, starting with the initial pair at `n = 0`.
pub fn run_coupled<R, O>(
    oracle: &O,
    params: &Params<R>,
    z0: &PhaseState<R>,
    z0_prime: &PhaseState<R>,
    n: u64,
    stream: &ChainStream,
    metric: &MetricMatrix<R>,
) -> Result<CouplingTrace<R>, KernelError>
where
    R: Real,
    O: GradientOracle<R>,
    StandardNormal: Distribution<R>,
{
    let d = z0.dim();
    if z0_prime.dim() != d {
        return Err(KernelError::DimensionMismatch {
            expected: d,
            got: z0_prime.dim(),
        });
    }
    let mut a = z0.clone();
    let mut b = z0_prime.clone();
    let mut steps = Vec::with_capacity(n as usize + 1);
    let record = |n: u64, a: &PhaseState<R>, b: &PhaseState<R>| {
        let diff = a.sub(b);
        CouplingStep {
            n,
            dist_euclid: diff.norm(),
            dist_m: metric.norm(&diff),
        }
    };
    steps.push(record(0, &a, &b));
    for t in 0..n {
        let g_in = standard_normal_vec::<R>(&mut stream.rng(t, stage::DAMP_IN), d);
        let g_out = standard_normal_vec::<R>(&mut stream.rng(t, stage::DAMP_OUT), d);
        let auxs: Vec<O::Aux> = (0..params.k)
            .map(|k| oracle.sample_aux(&mut stream.rng(t, stage::AUX_BASE + k as u64)))
            .collect();
        a = transition_with_noise(oracle, params, &a, &g_in, &auxs, &g_out)?;
        b = transition_with_noise(oracle, params, &b, &g_in, &auxs, &g_out)?;
        steps.push(record(t + 1, &a, &b));
    }
    Ok(CouplingTrace { k: params.k, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{CountingOracle, QuadraticOracle};
    use approx::assert_relative_eq;

    fn state(x: f64, v: f64) -> PhaseState<f64> {
        PhaseState::new(vec![x], vec![v]).unwrap()
    }

    #[test]
    fn verlet_fixed_point_at_origin() {
        let o = QuadraticOracle::new(vec![1.0]).unwrap();
        let z = verlet_step(&o, &(), 0.1, &state(0.0, 0.0)).unwrap();
        assert_eq!(z.x()[0], 0.0);
        assert_eq!(z.v()[0], 0.0);
    }

    #[test]
    fn verlet_hand_evaluation() {
        // force at midpoint 1 + 0.05*0 = 1; x' = 1 - 0.005, v' = -0.1
        let o = QuadraticOracle::new(vec![1.0]).unwrap();
        let z = verlet_step(&o, &(), 0.1, &state(1.0, 0.0)).unwrap();
        assert_relative_eq!(z.x()[0], 0.995, epsilon = 1e-15);
        assert_relative_eq!(z.v()[0], -0.1, epsilon = 1e-15);
    }

    #[test]
    fn verlet_evaluates_force_once() {
        let inner = QuadraticOracle::new(vec![1.0]).unwrap();
        let o = CountingOracle::new(&inner);
        verlet_step(&o, &(), 0.1, &state(1.0, 2.0)).unwrap();
        assert_eq!(o.evaluations(), 1);
    }

    #[test]
    fn verlet_matches_rotation_form_on_quadratic() {
        // rotation form: cosθ = 1 − δ²λ/2, sinθ = δ√(λ(1−δ²λ/4)), ν = √(λ/(1−δ²λ/4))
        let (lambda, delta) = (2.7_f64, 0.35_f64);
        let o = QuadraticOracle::new(vec![lambda]).unwrap();
        let (x0, v0) = (0.8, -1.3);
        let z = verlet_step(&o, &(), delta, &state(x0, v0)).unwrap();
        let cos_t = 1.0 - delta * delta * lambda / 2.0;
        let sin_t = delta * (lambda * (1.0 - delta * delta * lambda / 4.0)).sqrt();
        let nu = (lambda / (1.0 - delta * delta * lambda / 4.0)).sqrt();
        assert_relative_eq!(z.x()[0], cos_t * x0 + sin_t / nu * v0, epsilon = 1e-12);
        assert_relative_eq!(z.v()[0], -nu * sin_t * x0 + cos_t * v0, epsilon = 1e-12);
    }

    #[test]
    fn verlet_conserves_modified_energy() {
        // ν²x² + v² with ν² = λ/(1 − δ²λ/4) is exactly invariant in real
        // arithmetic; check drift stays below 1e-10 relative over 1e4 steps.
        let (lambda, delta) = (1.3_f64, 0.3_f64);
        let o = QuadraticOracle::new(vec![lambda]).unwrap();
        let nu_sq = lambda / (1.0 - delta * delta * lambda / 4.0);
        let mut z = state(1.0, 0.5);
        let h0 = nu_sq * z.x()[0] * z.x()[0] + z.v()[0] * z.v()[0];
        for _ in 0..10_000 {
            z = verlet_step(&o, &(), delta, &z).unwrap();
        }
        let h = nu_sq * z.x()[0] * z.x()[0] + z.v()[0] * z.v()[0];
        assert!(
            (h - h0).abs() / h0 < 1e-10,
            "energy drift {}",
            (h - h0).abs() / h0
        );
    }

    #[test]
    fn verlet_time_reversal() {
        // negating the velocity before and after inverts the map
        let o = PerturbedOracle();
        let z0 = state(0.7, -0.4);
        let z1 = verlet_step(&o, &(), 0.2, &z0).unwrap();
        let flipped = PhaseState::new(z1.x().to_vec(), vec![-z1.v()[0]]).unwrap();
        let back = verlet_step(&o, &(), 0.2, &flipped).unwrap();
        assert_relative_eq!(back.x()[0], z0.x()[0], epsilon = 1e-12);
        assert_relative_eq!(-back.v()[0], z0.v()[0], epsilon = 1e-12);
    }

    // small non-linear force for the reversal test
    struct PerturbedOracle();
    impl GradientOracle<f64> for PerturbedOracle {
        type Aux = ();
        fn dim(&self) -> usize {
            1
        }
        fn curvature_bounds(&self) -> (f64, f64) {
            (1.0, 1.5)
        }
        fn is_deterministic(&self) -> bool {
            true
        }
        fn sample_aux(&self, _rng: &mut rand_chacha::ChaCha8Rng) -> Self::Aux {}
        fn force_into(&self, x: &[f64], _aux: &Self::Aux, out: &mut [f64]) {
            out[0] = x[0] + 0.5 * x[0].tanh();
        }
    }

    #[test]
    fn verlet_overflow_names_coordinate() {
        let o = QuadraticOracle::new(vec![1.0, 1.0]).unwrap();
        let z = PhaseState::new(vec![f64::MAX / 2.0, 0.0], vec![f64::MAX / 2.0, 0.0]).unwrap();
        match verlet_step(&o, &(), 1.9, &z) {
            Err(KernelError::NonFiniteForce { coordinate })
            | Err(KernelError::NonFiniteState { coordinate }) => {
                assert_eq!(coordinate, 0)
            }
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn damping_leaves_position_and_shrinks_velocity() {
        let z = state(3.0, 2.0);
        let out = damping_step(0.5, &z, &[0.0]).unwrap();
        assert_eq!(out.x()[0], 3.0);
        assert_relative_eq!(out.v()[0], 1.0, epsilon = 1e-15);
        // eta = 0 is full refreshment
        let out = damping_step(0.0, &z, &[1.75]).unwrap();
        assert_eq!(out.v()[0], 1.75);
        // shape mismatch is rejected
        assert!(damping_step(0.5, &z, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn transition_consumes_expected_slots() {
        // with both Gaussians zero and eta ~ 1 the transition reduces to K Verlet steps
        let o = QuadraticOracle::new(vec![1.0]).unwrap();
        let eta = 1.0 - f64::EPSILON;
        let params = Params {
            delta: 0.1,
            k: 4,
            eta,
        };
        let z0 = state(1.0, 0.0);
        let auxs = vec![(); 4];
        let out = transition_with_noise(&o, &params, &z0, &[0.0], &auxs, &[0.0]).unwrap();
        let mut z = z0.clone();
        for _ in 0..4 {
            z = verlet_step(&o, &(), 0.1, &z).unwrap();
        }
        assert_relative_eq!(out.x()[0], z.x()[0], epsilon = 1e-12);
        assert_relative_eq!(out.v()[0], z.v()[0], epsilon = 1e-12);
    }

    #[test]
    fn chain_gradient_budget_and_replay() {
        let inner = QuadraticOracle::new(vec![1.0]).unwrap();
        let o = CountingOracle::new(&inner);
        let params = Params::new(0.1, 7, 0.3).unwrap();
        let stream = ChainStream::new(42, 0);
        let z0 = state(1.0, 0.0);
        let (z_end, stats) = run_chain(&o, &params, &z0, 100, &stream, |_, _| {}).unwrap();
        assert_eq!(stats.grad_evals, 700);
        assert_eq!(o.evaluations(), 700);
        // identical seed and config replays bit-identically
        let (z_end2, _) = run_chain(&inner, &params, &z0, 100, &stream, |_, _| {}).unwrap();
        assert_eq!(z_end.x()[0].to_bits(), z_end2.x()[0].to_bits());
        assert_eq!(z_end.v()[0].to_bits(), z_end2.v()[0].to_bits());
    }

    #[test]
    fn zero_transitions_only_reports_initial_state() {
        let o = QuadraticOracle::new(vec![1.0]).unwrap();
        let params = Params::new(0.1, 1, 0.0).unwrap();
        let stream = ChainStream::new(1, 0);
        let mut seen = Vec::new();
        let z0 = state(0.5, -0.5);
        run_chain(&o, &params, &z0, 0, &stream, |t, z| {
            seen.push((t, z.x()[0]))
        })
        .unwrap();
        assert_eq!(seen, vec![(0, 0.5)]);
    }

    #[test]
    fn coupling_from_equal_states_stays_at_zero() {
        let o = QuadraticOracle::new(vec![1.0]).unwrap();
        let params = Params::new(0.2, 2, 0.4).unwrap();
        let stream = ChainStream::new(3, 0);
        let z0 = state(1.0, -1.0);
        let trace = run_coupled(
            &o,
            &params,
            &z0,
            &z0,
            50,
            &stream,
            &MetricMatrix::identity(),
        )
        .unwrap();
        assert_eq!(trace.steps.len(), 51);
        assert!(trace
            .steps
            .iter()
            .all(|s| s.dist_euclid == 0.0 && s.dist_m == 0.0));
        let ns: Vec<u64> = trace.steps.iter().map(|s| s.n).collect();
        assert!(ns.windows(2).all(|w| w[1] == w[0] + 1) && ns[0] == 0);
    }
}
