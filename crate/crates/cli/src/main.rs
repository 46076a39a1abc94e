//! `jlcm`: simulate, fit, select, predict and evaluate joint latent class
//! models from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CovarianceDesignKind, RunConfig};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "jlcm", version, about = "Bayesian joint latent class models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its true labels.
    Simulate,
    /// Fit one model with K classes.
    Fit,
    /// Fit every K in a range and score each by DIC.
    Select,
    /// Conditional survival predictions from a fitted model.
    Predict,
    /// Per-replicate AUC and label error rate.
    Evaluate,
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// TOML run configuration; without it the default scenario is simulated.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, conflicts_with = "k_range")]
    k: Option<usize>,
    /// Inclusive range of class counts, `A..B`.
    #[arg(long, global = true, value_parser = parse_range)]
    k_range: Option<(usize, usize)>,
    #[arg(long, global = true)]
    landmark: Option<f64>,
    /// Comma-separated prediction horizons.
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    /// Prediction window scored by `evaluate`.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true, value_enum)]
    covariance_design: Option<CovarianceDesignKind>,
    /// Directory of a fitted model, for `predict`.
    #[arg(long, global = true)]
    fit: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    Ok((a, b))
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.sampler.seed = seed;
            if let Some(s) = cfg.simulation.as_mut() {
                s.seed = seed;
            }
        }
        if let Some(out) = &self.out {
            cfg.io.out = Some(out.clone());
        }
        if let Some(k) = self.k {
            cfg.model.k = k;
            cfg.model.k_min = k;
            cfg.model.k_max = k;
        }
        if let Some((a, b)) = self.k_range {
            cfg.model.k_min = a;
            cfg.model.k_max = b;
        }
        if let Some(t) = self.landmark {
            cfg.prediction.landmark = t;
        }
        if let Some(h) = &self.horizons {
            cfg.prediction.horizons.clone_from(h);
        }
        if let Some(h) = self.horizon {
            cfg.prediction.horizon = h;
        }
        if let Some(d) = self.covariance_design {
            cfg.model.covariance_design = d;
        }
        if let Some(f) = &self.fit {
            cfg.io.fit = Some(f.clone());
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("JLCM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| error::CliError::Config(format!("JLCM_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| error::CliError::Config(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> CliResult<()> {
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let mut cfg = match &cli.overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::simulated_default(),
    };
    cli.overrides.apply(&mut cfg);
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Select => commands::cmd_select(&cfg),
        Command::Predict => commands::cmd_predict(&cfg),
        Command::Evaluate => commands::cmd_evaluate(&cfg, cfg.prediction.horizon),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
