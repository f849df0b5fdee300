//! Oracle selection from config keys.

use anyhow::{bail, Context, Result};
use uhmc::kernel::{GradientOracle, MiniBatchLsqOracle, PerturbedQuadraticOracle, QuadraticOracle};
use uhmc::SpectralInterval;

use crate::config::Config;

pub const ORACLE_KEYS: &[&str] = &[
    "oracle",
    "spectrum",
    "alpha",
    "dim",
    "mb_terms",
    "mb_batch",
    "mb_rows",
    "mb_scale",
    "mb_data_seed",
];

pub enum OracleChoice {
    Quadratic(QuadraticOracle<f64>),
    Perturbed(PerturbedQuadraticOracle<f64>),
    MiniBatch(MiniBatchLsqOracle<f64>),
}

/// Runs `$body` with `$o` bound to the concrete oracle.
macro_rules! with_oracle {
    ($choice:expr, $o:ident => $body:expr) => {
        match $choice {
            $crate::oracle::OracleChoice::Quadratic($o) => $body,
            $crate::oracle::OracleChoice::Perturbed($o) => $body,
            $crate::oracle::OracleChoice::MiniBatch($o) => $body,
        }
    };
}
pub(crate) use with_oracle;

impl OracleChoice {
    pub fn build(cfg: &mut Config) -> Result<Self> {
        cfg.set_default("oracle", "quadratic");
        let kind = cfg.require_str("oracle")?.to_string();
        match kind.as_str() {
            "quadratic" => {
                cfg.set_default("spectrum", "1.0");
                let diag = cfg.get_f64_list("spectrum")?.unwrap();
                Ok(Self::Quadratic(
                    QuadraticOracle::new(diag).context("config key 'spectrum'")?,
                ))
            }
            "perturbed" => {
                cfg.set_default("alpha", "0.1");
                cfg.set_default("dim", "1");
                let alpha = cfg.require_f64("alpha")?;
                let dim = cfg.get_usize("dim")?.unwrap();
                Ok(Self::Perturbed(
                    PerturbedQuadraticOracle::new(alpha, dim)
                        .context("config keys 'alpha'/'dim'")?,
                ))
            }
            "minibatch" => {
                cfg.set_default("mb_terms", "8");
                cfg.set_default("mb_batch", "2");
                cfg.set_default("dim", "5");
                cfg.set_default("mb_rows", "5");
                cfg.set_default("mb_scale", "0.05");
                cfg.set_default("mb_data_seed", "1");
                let oracle = MiniBatchLsqOracle::synthetic(
                    cfg.get_usize("mb_terms")?.unwrap(),
                    cfg.get_usize("mb_batch")?.unwrap(),
                    cfg.get_usize("mb_rows")?.unwrap(),
                    cfg.get_usize("dim")?.unwrap(),
                    cfg.require_f64("mb_scale")?,
                    cfg.require_u64("mb_data_seed")?,
                )
                .context("mini-batch oracle construction")?;
                Ok(Self::MiniBatch(oracle))
            }
            other => bail!(
                "config key 'oracle': unknown oracle '{other}' (quadratic | perturbed | minibatch)"
            ),
        }
    }

    pub fn dim(&self) -> usize {
        with_oracle!(self, o => o.dim())
    }

    pub fn interval(&self) -> SpectralInterval {
        let (m, l) = with_oracle!(self, o => o.curvature_bounds());
        SpectralInterval::new(m, l).expect("oracle curvature bounds are a valid interval")
    }

    /// Second-moment floor of the force at its fixed point; zero for
    /// deterministic oracles.
    pub fn nb_floor(&self) -> f64 {
        match self {
            Self::MiniBatch(o) if !o.is_deterministic() => o.nb_floor(),
            _ => 0.0,
        }
    }
}
