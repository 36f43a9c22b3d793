//! `xistep`: reproducible experiments on the two-colony Ξ stepping stone dual.

mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use xistep_core::dual::McConfig;
use xistep_core::rational::parse_rational;
use xistep_core::simplex::CollisionProfile;

use crate::commands::Outcome;
use crate::config::Experiment;

#[derive(Debug, Parser)]
#[command(name = "xistep", version, about = "Moment dual of the two-colony stepping stone model with Xi-resampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replicas; overrides the configured count.
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the `simulate` trajectory CSV here instead of embedding it.
    #[arg(long, global = true)]
    trajectory: Option<PathBuf>,
    /// Test hook for `selftest`: "n;k;s=delta" perturbs one rate.
    #[arg(long, global = true, hide = true)]
    perturb_rate: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Rate table and consistency identities.
    Rates,
    /// One dual trajectory.
    Simulate,
    /// Monte-Carlo estimate of Q_t on a power of the E* indicator.
    Qt,
    /// Exact stationary moments, optionally cross-checked by Monte Carlo.
    Stationary,
    /// Complete monotonicity of the exact stationary moments.
    Hausdorff,
    /// Reversibility probes and the resulting verdict.
    Reversibility,
    /// Built-in invariant suites.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::Simulate => "simulate",
            Command::Qt => "qt",
            Command::Stationary => "stationary",
            Command::Hausdorff => "hausdorff",
            Command::Reversibility => "reversibility",
            Command::Selftest => "selftest",
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("XISTEP_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().with_context(|| format!("XISTEP_THREADS={v}"))?;
            Ok(Some(n.max(1)))
        }
        _ => Ok(None),
    }
}

fn parse_perturbation(text: &str) -> Result<selftest::Perturbation> {
    let (profile, delta) = text.split_once('=').context("expected \"n;k;s=delta\"")?;
    Ok((profile.parse::<CollisionProfile>()?, parse_rational(delta)?))
}

fn run(cli: &Cli) -> Result<(String, Outcome, u64, Option<String>)> {
    let experiment = match &cli.config {
        Some(path) => Some(Experiment::load(path)?),
        None if cli.command.name() == "selftest" => None,
        None => anyhow::bail!("--config is required for {}", cli.command.name()),
    };
    let seed = cli
        .seed
        .or_else(|| experiment.as_ref().map(|e| e.raw.seed))
        .unwrap_or(0);
    let hash = experiment.as_ref().map(|e| e.hash.clone());
    let mc = |exp: &Experiment| -> Result<McConfig> {
        Ok(McConfig {
            replicas: cli.replicas.unwrap_or(exp.raw.replicas),
            seed,
            threads: threads_from_env()?,
            evolution: exp.evolution(),
            max_events: exp.raw.options.max_events,
        })
    };
    let outcome = match (cli.command, experiment.as_ref()) {
        (Command::Selftest, exp) => {
            let perturb = cli.perturb_rate.as_deref().map(parse_perturbation).transpose()?;
            selftest::run(exp, seed, perturb.as_ref())?
        }
        (_, None) => unreachable!("config checked above"),
        (Command::Rates, Some(e)) => commands::rates(e)?,
        (Command::Simulate, Some(e)) => commands::simulate(e, seed)?,
        (Command::Qt, Some(e)) => commands::qt(e, &mc(e)?)?,
        (Command::Stationary, Some(e)) => commands::stationary(e, &mc(e)?)?,
        (Command::Hausdorff, Some(e)) => commands::hausdorff(e)?,
        (Command::Reversibility, Some(e)) => commands::reversibility(e)?,
    };
    Ok((cli.command.name().to_string(), outcome, seed, hash))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((command, mut outcome, seed, hash)) => {
            if let Some(csv) = outcome.csv.take() {
                match &cli.trajectory {
                    Some(path) => {
                        if let Err(e) = std::fs::write(path, csv) {
                            eprintln!("error: writing {}: {e}", path.display());
                            return ExitCode::from(2);
                        }
                    }
                    None => outcome.result["trajectory_csv"] = json!(csv),
                }
            }
            let report = json!({
                "artifact": "xistep",
                "version": env!("CARGO_PKG_VERSION"),
                "config_hash": hash,
                "seed": seed,
                "command": command,
                "status": if outcome.passed { "pass" } else { "fail" },
                "result": outcome.result,
            });
            let text = serde_json::to_string_pretty(&report).expect("JSON values serialize") + "\n";
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: writing {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
