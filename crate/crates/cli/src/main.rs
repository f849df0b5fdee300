//! `uhmc`: experiment driver for the sampler toolkit.
//!
//! Every command reads a flat `key = value` config (file and/or `--set`
//! overrides), writes one CSV whose leading comment block is the complete
//! resolved configuration, and exits nonzero when a requested check fails.
//! Re-running a command on its own output file reproduces it byte for byte.

mod commands;
mod config;
mod csv;
mod oracle;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::CommandOutput;
use config::Config;

#[derive(Parser)]
#[command(name = "uhmc", version, about = "Unadjusted HMC sampler toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file: plain `key = value` lines or a previously produced CSV
    /// (its provenance block is parsed, data rows are ignored).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted; never recorded in the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replica runs; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Additional overrides mirroring config keys, e.g. --set delta=0.05.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bias and rate table for a curvature class.
    Analyze(Common),
    /// Run one chain and stream moment snapshots.
    Sample(Common),
    /// Synchronous coupling: distances, fitted rate, contraction check.
    Couple(Common),
    /// Empirical ergodic risk against the certified bound.
    Risk(Common),
    /// Optimal-parameter report (tolerance-driven and fixed step size).
    Tune(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Sample(_) => "sample",
            Command::Couple(_) => "couple",
            Command::Risk(_) => "risk",
            Command::Tune(_) => "tune",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Sample(c)
            | Command::Couple(c)
            | Command::Risk(c)
            | Command::Tune(c) => c,
        }
    }
}

fn resolve_config(name: &str, common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for spec in &common.set {
        cfg.apply_override(spec)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", seed.to_string());
    }
    if let Some(threads) = common.threads {
        cfg.set("threads", threads.to_string());
    }
    if let Some(recorded) = cfg.get_str("command") {
        if recorded != name {
            bail!("config is for command '{recorded}' but '{name}' was invoked");
        }
    }
    cfg.set("command", name);
    cfg.set_default("seed", "0");
    let default_threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    cfg.set_default("threads", default_threads.to_string());
    Ok(cfg)
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let name = cli.command.name();
    let common = cli.command.common();
    let mut cfg = resolve_config(name, common)?;

    let threads = cfg.get_usize("threads")?.unwrap().max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("thread pool setup")?;

    let CommandOutput { csv, exit, failure } = match cli.command {
        Command::Analyze(_) => commands::cmd_analyze(&mut cfg)?,
        Command::Sample(_) => commands::cmd_sample(&mut cfg)?,
        Command::Couple(_) => commands::cmd_couple(&mut cfg)?,
        Command::Risk(_) => commands::cmd_risk(&mut cfg)?,
        Command::Tune(_) => commands::cmd_tune(&mut cfg)?,
    };

    match &common.out {
        Some(path) => std::fs::write(path, &csv)
            .with_context(|| format!("cannot write output {}", path.display()))?,
        None => print!("{csv}"),
    }
    if let Some(summary) = failure {
        eprintln!("{summary}");
    }
    Ok(exit)
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
