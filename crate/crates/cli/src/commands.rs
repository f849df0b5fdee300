//! The five experiment drivers. Each consumes a resolved [`Config`], returns
//! the CSV text plus an exit code, and never prints data itself.

use anyhow::{bail, Context, Result};

use uhmc::bounds::{certified_rate, risk_bound, CertRegime};
use uhmc::diagnostics::{ergodic_risk, fit_decay, DecayFlag, RunningMoments};
use uhmc::gaussian::{
    self, epsilon_bias, eta_star, optimal_k_fixed_delta, optimal_params, rate, RateRegime,
};
use uhmc::kernel::rng::SETUP_TRANSITION;
use uhmc::kernel::{run_coupled, standard_normal_vec, transition, ChainStream};
use uhmc::{MetricMatrix, Params, PhaseState, SpectralInterval};

use crate::config::Config;
use crate::csv::{Cell, CsvBuilder};
use crate::oracle::{with_oracle, OracleChoice, ORACLE_KEYS};

pub const VERSION_BANNER: &str = concat!("uhmc ", env!("CARGO_PKG_VERSION"));

pub struct CommandOutput {
    pub csv: String,
    pub exit: i32,
    /// Machine-readable summary printed to stderr when `exit != 0`.
    pub failure: Option<String>,
}

impl CommandOutput {
    fn ok(csv: String) -> Self {
        Self {
            csv,
            exit: 0,
            failure: None,
        }
    }
}

const COMMON_KEYS: &[&str] = &["command", "seed", "threads"];

fn allowed(extra: &[&'static str], with_oracle_keys: bool) -> Vec<&'static str> {
    let mut keys = COMMON_KEYS.to_vec();
    if with_oracle_keys {
        keys.extend_from_slice(ORACLE_KEYS);
    }
    keys.extend_from_slice(extra);
    keys
}

fn params_from(cfg: &mut Config) -> Result<Params> {
    cfg.set_default("k", "1");
    cfg.set_default("eta", "0");
    let delta = cfg.require_f64("delta")?;
    let k = cfg.get_u32("k")?.unwrap();
    let eta = cfg.require_f64("eta")?;
    Params::new(delta, k, eta).map_err(|e| anyhow::anyhow!("config keys 'delta'/'k'/'eta': {e}"))
}

fn state_from(cfg: &Config, key_x: &str, key_v: &str, d: usize) -> Result<PhaseState> {
    let expand = |list: Option<Vec<f64>>| -> Result<Vec<f64>> {
        match list {
            None => Ok(vec![0.0; d]),
            Some(v) if v.len() == 1 => Ok(vec![v[0]; d]),
            Some(v) if v.len() == d => Ok(v),
            Some(v) => bail!("initial state needs 1 or {d} entries, got {}", v.len()),
        }
    };
    let x = expand(cfg.get_f64_list(key_x)?)?;
    let v = expand(cfg.get_f64_list(key_v)?)?;
    PhaseState::new(x, v).map_err(|e| anyhow::anyhow!("config keys '{key_x}'/'{key_v}': {e}"))
}

fn regime_tag(r: RateRegime) -> &'static str {
    match r {
        RateRegime::Generic => "generic",
        RateRegime::PeriodicDegenerate => "periodic-degenerate",
    }
}

/// `analyze`: closed-form bias/rate table, with tuned parameter candidates
/// when a tolerance is given instead of an explicit step size.
pub fn cmd_analyze(cfg: &mut Config) -> Result<CommandOutput> {
    cfg.reject_unknown(&allowed(
        &["m", "l", "epsilon", "dim", "delta", "k", "eta"],
        false,
    ))?;
    let m = cfg.require_f64("m")?;
    let l = cfg.require_f64("l")?;
    let interval =
        SpectralInterval::new(m, l).map_err(|e| anyhow::anyhow!("config keys 'm'/'l': {e}"))?;

    let explicit = cfg.contains("delta");
    let derived = cfg.contains("epsilon");
    if explicit == derived {
        bail!("analyze needs exactly one of 'delta' (explicit) or 'epsilon' + 'dim' (tuned)");
    }

    let mut rows: Vec<(String, Params)> = Vec::new();
    let dim;
    if explicit {
        cfg.set_default("dim", "1");
        dim = cfg.get_usize("dim")?.unwrap();
        rows.push(("explicit".into(), params_from(cfg)?));
    } else {
        dim = cfg
            .get_usize("dim")?
            .context("missing required config key 'dim'")?;
        let epsilon = cfg.require_f64("epsilon")?;
        let best = optimal_params(&interval, epsilon, dim)
            .map_err(|e| anyhow::anyhow!("config key 'epsilon': {e}"))?;
        let delta = best.params.delta;
        let eta_lang = 1.0 - m.sqrt() * delta;
        if eta_lang < 0.0 {
            bail!("config key 'epsilon': tolerance too coarse for a damping-scaled candidate (sqrt(m)*delta > 1)");
        }
        rows.push(("optimal".into(), best.params));
        rows.push(("langevin".into(), Params::new(delta, 1, eta_lang)?));
        rows.push((
            "position_hmc".into(),
            Params::new(delta, best.params.k, 0.0)?,
        ));
    }

    let mut out = CsvBuilder::new(VERSION_BANNER, &cfg.provenance_block());
    out.header(&[
        "candidate",
        "delta",
        "k",
        "eta",
        "h",
        "g",
        "rho_per_gradient",
        "epsilon_bias",
        "regime",
    ]);
    for (name, p) in rows {
        let r = rate(&p, &interval).map_err(|e| anyhow::anyhow!("candidate '{name}': {e}"))?;
        let eps = epsilon_bias(p.delta, l, dim)?;
        out.row(&[
            Cell::from(name.as_str()),
            Cell::from(p.delta),
            Cell::U64(p.k as u64),
            Cell::from(p.eta),
            Cell::from(r.h),
            Cell::from(r.g),
            Cell::from(r.rho),
            Cell::from(eps),
            Cell::from(regime_tag(r.regime)),
        ]);
    }
    Ok(CommandOutput::ok(out.finish()))
}

/// `sample`: runs one chain and emits windowed batch-means moment snapshots.
pub fn cmd_sample(cfg: &mut Config) -> Result<CommandOutput> {
    cfg.reject_unknown(&allowed(
        &[
            "delta",
            "k",
            "eta",
            "transitions",
            "burn_in",
            "stride",
            "x0",
            "v0",
        ],
        true,
    ))?;
    let oracle = OracleChoice::build(cfg)?;
    let params = params_from(cfg)?;
    cfg.set_default("transitions", "1000");
    cfg.set_default("burn_in", "0");
    let transitions = cfg.require_u64("transitions")?;
    cfg.set_default("stride", transitions.max(1).to_string());
    let stride = cfg.require_u64("stride")?.max(1);
    let burn_in = cfg.require_u64("burn_in")?;
    let seed = cfg.require_u64("seed")?;
    let d = oracle.dim();
    let z0 = state_from(cfg, "x0", "v0", d)?;

    let mut out = CsvBuilder::new(VERSION_BANNER, &cfg.provenance_block());
    let mut columns: Vec<String> = vec!["transition".into(), "samples".into()];
    for j in 0..d {
        for name in [
            "mean_x",
            "se_mean_x",
            "var_x",
            "se_var_x",
            "mean_v",
            "se_mean_v",
            "var_v",
            "se_var_v",
        ] {
            columns.push(format!("{name}_{j}"));
        }
    }
    out.header(&columns.iter().map(|s| s.as_str()).collect::<Vec<_>>());

    let emit = |out: &mut CsvBuilder, t: u64, report: &uhmc::MomentReport| {
        let mut cells = vec![Cell::U64(t), Cell::U64(report.samples as u64)];
        for c in &report.coords {
            for v in [
                c.mean_x,
                c.se_mean_x,
                c.var_x,
                c.se_var_x,
                c.mean_v,
                c.se_mean_v,
                c.var_v,
                c.se_var_v,
            ] {
                cells.push(Cell::from(v));
            }
        }
        out.row(&cells);
    };

    // initial snapshot: the starting state as a single sample
    let mut initial = RunningMoments::new(d, 1);
    initial.push(&z0);
    emit(&mut out, 0, &initial.finish());

    let stream = ChainStream::new(seed, 0);
    let (snapshots, aborted) = with_oracle!(&oracle, o => sample_windows(
        o, &params, z0, burn_in, transitions, stride, &stream, d,
    ));
    for (t, report) in &snapshots {
        emit(&mut out, *t, report);
    }
    if let Some((t, e)) = aborted {
        out.note("aborted", format!("transition {t}: {e}"));
        return Ok(CommandOutput {
            csv: out.finish(),
            exit: 1,
            failure: Some(format!(
                "{{\"command\":\"sample\",\"check\":\"run\",\"status\":\"aborted\",\"detail\":\"{e}\"}}"
            )),
        });
    }
    Ok(CommandOutput::ok(out.finish()))
}

type Snapshots = Vec<(u64, uhmc::MomentReport)>;
type Abort = Option<(u64, uhmc::kernel::KernelError)>;

/// Runs the chain, closing one moment window per `stride` transitions;
/// stops early on kernel errors and reports the failing transition.
#[allow(clippy::too_many_arguments)]
fn sample_windows<O: uhmc::kernel::GradientOracle<f64>>(
    oracle: &O,
    params: &Params,
    z0: PhaseState,
    burn_in: u64,
    transitions: u64,
    stride: u64,
    stream: &ChainStream,
    d: usize,
) -> (Snapshots, Abort) {
    let batch = (stride as usize / 50).max(1);
    let mut snapshots = Vec::new();
    let mut window = RunningMoments::new(d, batch);
    let mut in_window = 0u64;
    let mut z = z0;
    for t in 0..burn_in + transitions {
        match transition(oracle, params, &z, stream, t) {
            Ok(next) => z = next,
            Err(e) => return (snapshots, Some((t + 1, e))),
        }
        if t + 1 > burn_in {
            window.push(&z);
            in_window += 1;
            if in_window == stride {
                snapshots.push((t + 1, window.finish()));
                window = RunningMoments::new(d, batch);
                in_window = 0;
            }
        }
    }
    if in_window > 0 {
        snapshots.push((burn_in + transitions, window.finish()));
    }
    (snapshots, None)
}

/// `couple`: synchronous coupling distances, fitted decay rate and, when the
/// parameters are certified, the per-step contraction check.
pub fn cmd_couple(cfg: &mut Config) -> Result<CommandOutput> {
    cfg.reject_unknown(&allowed(
        &[
            "delta",
            "k",
            "eta",
            "transitions",
            "offset_norm",
            "discard",
            "x0",
            "v0",
        ],
        true,
    ))?;
    let oracle = OracleChoice::build(cfg)?;
    let params = params_from(cfg)?;
    cfg.set_default("transitions", "2000");
    cfg.set_default("offset_norm", "1");
    cfg.set_default("discard", "0.2");
    let transitions = cfg.require_u64("transitions")?;
    let offset_norm = cfg.require_f64("offset_norm")?;
    let discard = cfg.require_f64("discard")?;
    let seed = cfg.require_u64("seed")?;
    let d = oracle.dim();
    let z0 = state_from(cfg, "x0", "v0", d)?;

    // second chain: the first plus a random offset of the requested norm
    let stream = ChainStream::new(seed, 0);
    let mut dir: Vec<f64> = standard_normal_vec(&mut stream.rng(SETUP_TRANSITION, 0), 2 * d);
    let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in dir.iter_mut() {
        *c *= offset_norm / norm;
    }
    let z0_prime = PhaseState::new(
        (0..d).map(|i| z0.x()[i] + dir[i]).collect(),
        (0..d).map(|i| z0.v()[i] + dir[d + i]).collect(),
    )?;

    let interval = oracle.interval();
    let cert = certified_rate(&params, &interval);
    let metric = cert.metric.unwrap_or_else(MetricMatrix::identity);

    let trace = with_oracle!(&oracle, o => run_coupled(o, &params, &z0, &z0_prime, transitions, &stream, &metric))?;

    let mut out = CsvBuilder::new(VERSION_BANNER, &cfg.provenance_block());
    out.header(&["n", "dist_euclid", "dist_m"]);
    for s in &trace.steps {
        out.row(&[
            Cell::U64(s.n),
            Cell::from(s.dist_euclid),
            Cell::from(s.dist_m),
        ]);
    }

    match fit_decay(&trace, discard) {
        Ok(fit) => {
            out.note(
                "fit rate_per_transition",
                crate::csv::fmt_f64(fit.rate_per_transition),
            );
            out.note(
                "fit rate_per_gradient",
                crate::csv::fmt_f64(fit.rate_per_gradient),
            );
            out.note("fit r_squared", crate::csv::fmt_f64(fit.r_squared));
            out.note(
                "fit flag",
                match fit.flag {
                    DecayFlag::Clean => "clean",
                    DecayFlag::AllZero => "degenerate-all-zero",
                    DecayFlag::NonDecaying => "non-decaying",
                },
            );
        }
        Err(e) => out.note("fit flag", format!("unavailable ({e})")),
    }
    if let OracleChoice::Quadratic(_) = oracle {
        let analytic = rate(&params, &interval)?;
        out.note(
            "analytic rho_per_gradient",
            crate::csv::fmt_f64(analytic.rho),
        );
        out.note("analytic regime", regime_tag(analytic.regime));
    }

    let mut exit = 0;
    let mut failure = None;
    match cert.rho {
        Some(rho) => {
            let regime = match cert.regime {
                Some(CertRegime::General) => "general",
                Some(CertRegime::PositionHmc) => "position-hmc",
                None => unreachable!(),
            };
            out.note("certified rho", crate::csv::fmt_f64(rho));
            out.note("certified regime", regime);
            // the position-certificate contracts |x - x'| only, which the
            // M-norm column does not witness; check the general regime
            if cert.regime == Some(CertRegime::General) {
                let mut violations = 0u64;
                for w in trace.steps.windows(2) {
                    if w[0].dist_m > 0.0 && w[1].dist_m > (1.0 - rho) * w[0].dist_m {
                        violations += 1;
                    }
                }
                let pass = violations == 0;
                out.note("contraction check", if pass { "pass" } else { "fail" });
                if !pass {
                    exit = 2;
                    failure = Some(format!(
                        "{{\"command\":\"couple\",\"check\":\"per_step_contraction\",\"status\":\"fail\",\"violations\":{violations}}}"
                    ));
                }
            } else {
                out.note("contraction check", "n/a (position regime)");
            }
        }
        None => {
            out.note(
                "certified rho",
                format!("none (failed: {})", cert.failed.join(", ")),
            );
            out.note("contraction check", "n/a");
        }
    }
    Ok(CommandOutput {
        csv: out.finish(),
        exit,
        failure,
    })
}

/// `risk`: empirical ergodic mean-squared error against the certified bound
/// on an `(n, n0)` grid.
pub fn cmd_risk(cfg: &mut Config) -> Result<CommandOutput> {
    cfg.reject_unknown(&allowed(
        &[
            "delta",
            "k",
            "eta",
            "obs_coord",
            "reference",
            "replicas",
            "n_grid",
            "n0_grid",
            "w0",
            "x0",
            "v0",
        ],
        true,
    ))?;
    let oracle = OracleChoice::build(cfg)?;
    let params = params_from(cfg)?;
    cfg.set_default("obs_coord", "0");
    cfg.set_default("reference", "0");
    cfg.set_default("replicas", "100");
    cfg.set_default("n_grid", "250,500,1000");
    cfg.set_default("n0_grid", "0");
    let d = oracle.dim();
    cfg.set_default("w0", crate::csv::fmt_f64(10.0 * (d as f64).sqrt()));
    let obs_coord = cfg.get_usize("obs_coord")?.unwrap();
    if obs_coord >= d {
        bail!("config key 'obs_coord': coordinate {obs_coord} outside dimension {d}");
    }
    let reference = cfg.require_f64("reference")?;
    let replicas = cfg.get_usize("replicas")?.unwrap();
    let n_grid = cfg.get_u64_list("n_grid")?.unwrap();
    let n0_grid = cfg.get_u64_list("n0_grid")?.unwrap();
    let w0 = cfg.require_f64("w0")?;
    let seed = cfg.require_u64("seed")?;
    let z0 = state_from(cfg, "x0", "v0", d)?;

    let interval = oracle.interval();
    let cert = certified_rate(&params, &interval);
    let nb = oracle.nb_floor();
    let reason = if cert.is_certified() {
        String::new()
    } else {
        format!(
            "certificate unavailable (failed: {})",
            cert.failed.join(", ")
        )
    };

    let mut out = CsvBuilder::new(VERSION_BANNER, &cfg.provenance_block());
    out.header(&[
        "n",
        "n0",
        "mse",
        "se",
        "ci_low",
        "ci_high",
        "ln_bound_total",
        "bound_status",
        "reason",
    ]);
    let mut exit = 0;
    let mut failure = None;
    for &n0 in &n0_grid {
        for &n in &n_grid {
            let risk = with_oracle!(&oracle, o => ergodic_risk(
                o,
                &params,
                &z0,
                |x: &[f64]| x[obs_coord],
                reference,
                n,
                n0,
                replicas,
                seed,
            ))?;
            let (bound_cell, status) = if cert.is_certified() {
                let b = risk_bound(&cert, &params, &interval, d, n, n0, w0, nb)?;
                if risk.mse.ln() > b.ln_total && failure.is_none() {
                    exit = 3;
                    failure = Some(format!(
                        "{{\"command\":\"risk\",\"check\":\"mse_below_bound\",\"status\":\"fail\",\"n\":{n},\"n0\":{n0}}}"
                    ));
                }
                (Cell::from(b.ln_total), "ok")
            } else {
                (Cell::Empty, "unavailable")
            };
            out.row(&[
                Cell::U64(n),
                Cell::U64(n0),
                Cell::from(risk.mse),
                Cell::from(risk.se),
                Cell::from(risk.ci_low),
                Cell::from(risk.ci_high),
                bound_cell,
                Cell::from(status),
                Cell::from(reason.as_str()),
            ]);
        }
    }
    Ok(CommandOutput {
        csv: out.finish(),
        exit,
        failure,
    })
}

/// `tune`: tolerance-driven optimal parameters plus the fixed-step optimal-K
/// report.
pub fn cmd_tune(cfg: &mut Config) -> Result<CommandOutput> {
    cfg.reject_unknown(&allowed(&["m", "l", "epsilon", "dim", "delta"], false))?;
    let m = cfg.require_f64("m")?;
    let l = cfg.require_f64("l")?;
    let interval =
        SpectralInterval::new(m, l).map_err(|e| anyhow::anyhow!("config keys 'm'/'l': {e}"))?;
    if !cfg.contains("epsilon") && !cfg.contains("delta") {
        bail!("tune needs 'epsilon' + 'dim' and/or 'delta'");
    }

    let mut out = CsvBuilder::new(VERSION_BANNER, &cfg.provenance_block());
    out.header(&[
        "method",
        "delta",
        "k",
        "eta",
        "rho_per_gradient",
        "k_star",
        "in_precondition",
    ]);

    let mut fixed_delta = cfg.get_f64("delta")?;
    if cfg.contains("epsilon") {
        let dim = cfg
            .get_usize("dim")?
            .context("missing required config key 'dim'")?;
        let epsilon = cfg.require_f64("epsilon")?;
        let best = optimal_params(&interval, epsilon, dim)
            .map_err(|e| anyhow::anyhow!("config key 'epsilon': {e}"))?;
        out.row(&[
            Cell::from("tolerance_optimal"),
            Cell::from(best.params.delta),
            Cell::U64(best.params.k as u64),
            Cell::from(best.params.eta),
            Cell::from(best.predicted.rho),
            Cell::Empty,
            Cell::Empty,
        ]);
        fixed_delta = Some(fixed_delta.unwrap_or(best.params.delta));
    }

    if let Some(delta) = fixed_delta {
        let opt = optimal_k_fixed_delta(delta, &interval)
            .map_err(|e| anyhow::anyhow!("config key 'delta': {e}"))?;
        let precondition = if opt.in_precondition {
            "true"
        } else {
            "false (exhaustive scan)"
        };
        out.row(&[
            Cell::from("fixed_delta_tuned"),
            Cell::from(delta),
            Cell::U64(opt.best_k as u64),
            Cell::from(opt.best_eta),
            Cell::from(opt.best_rho),
            Cell::U64(opt.k_star as u64),
            Cell::from(precondition),
        ]);
        out.row(&[
            Cell::from("fixed_delta_eta0"),
            Cell::from(delta),
            Cell::U64(opt.best_k_eta0 as u64),
            Cell::from(0.0),
            Cell::from(opt.best_rho_eta0),
            Cell::U64(opt.k_star as u64),
            Cell::from(precondition),
        ]);
        // consistency: the tuned damping matches the minimizer of the
        // envelope factor at the chosen K
        let h = gaussian::h_envelope(
            &Params {
                delta,
                k: opt.best_k,
                eta: 0.0,
            },
            &interval,
        )?;
        out.note("eta_star at best k", crate::csv::fmt_f64(eta_star(h)));
    }
    Ok(CommandOutput::ok(out.finish()))
}
