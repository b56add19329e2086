//! Command-line driver for single runs, rate studies, audits and the
//! self-test suite.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use radlim::config::{RunConfig, SweepConfig};
use radlim::runner;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "radlim",
    about = "Grey radiative heat transfer, its diffusion limit, and rate studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Worker threads for sweep members.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled kinetic system.
    RunKinetic(CommonArgs),
    /// Integrate the nonlinear diffusion limit equation.
    RunLimit(CommonArgs),
    /// Run an epsilon sweep and fit the observed convergence rate.
    RateStudy(CommonArgs),
    /// Recompute diagnostics from the snapshots of a finished run.
    Audit(CommonArgs),
    /// Run the invariant self-test suites.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn load_run_config(args: &CommonArgs) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(eps) = args.epsilon {
        cfg.params.epsilon = eps;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.run.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::RunKinetic(args) => {
            let (cfg, out) = load_run_config(&args)?;
            let result = runner::run_kinetic(&cfg, &out)?;
            println!(
                "kinetic run '{}' finished at t={:.6e}; artifacts in {}",
                cfg.run.scenario,
                result.final_state.time,
                out.display()
            );
        }
        Command::RunLimit(args) => {
            let (cfg, out) = load_run_config(&args)?;
            let result = runner::run_limit(&cfg, &out, None)?;
            println!(
                "limit run '{}' finished at t={:.6e}; artifacts in {}",
                cfg.run.scenario,
                result.final_state.time,
                out.display()
            );
        }
        Command::RateStudy(args) => {
            let mut sweep = SweepConfig::from_file(&args.config)
                .with_context(|| format!("loading {}", args.config.display()))?;
            if let Some(seed) = args.seed {
                sweep.base.run.seed = seed;
            }
            let out = args
                .out
                .clone()
                .or_else(|| sweep.base.run.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let report = runner::run_rate_study(&sweep, &out, args.threads)?;
            println!(
                "rate study '{}' ({}, target s={}): slope {:.4}, R^2 {:.4}",
                report.scenario, report.bc_mode, report.rate_target, report.slope, report.r_squared
            );
            for m in &report.members {
                println!(
                    "  eps={:<8} error_total={:.6e}",
                    m.epsilon, m.error_total
                );
            }
            println!("report written to {}", out.join("report.json").display());
        }
        Command::Audit(args) => {
            let (cfg, out) = load_run_config(&args)?;
            let report = runner::audit(&cfg, &out)?;
            let max_residual = report
                .residuals
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            println!(
                "audit over {} snapshots: max residual {:.6e}, nonneg terms: {}{}",
                report.residuals.len(),
                max_residual,
                if report.nonneg_ok { "ok" } else { "VIOLATED" },
                report
                    .fitted_c
                    .map(|c| format!(", fitted Gronwall C = {c:.4}"))
                    .unwrap_or_default()
            );
            if !report.nonneg_ok {
                bail!("audit found negative dissipation or boundary terms");
            }
        }
        Command::Selftest { seed } => {
            let results = runner::selftest(seed);
            let mut failures = 0usize;
            for (name, ok, detail) in &results {
                println!(
                    "selftest {:<28} {} ({detail})",
                    name,
                    if *ok { "PASS" } else { "FAIL" }
                );
                if !ok {
                    failures += 1;
                }
            }
            if failures > 0 {
                bail!("{failures} selftest suite(s) failed");
            }
        }
    }
    Ok(())
}
