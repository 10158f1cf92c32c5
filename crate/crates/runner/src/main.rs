//! `bnp`: experiment runner for the finite-approximation library.
//!
//! Every subcommand reads a JSON config, writes its outputs plus a
//! `manifest.json` into the output directory, and exits with
//! 0 (all checks pass), 1 (a check failed) or 2 (the run could not complete).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{Experiment, Overrides};
use crate::error::RunError;
use crate::output::{OutputDir, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "bnp", version, about = "Finite approximations to completely random measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, env = "BNP_SEED")]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of replicates or chains; overrides the config.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Draw atom weights from a finite approximation.
    SamplePrior,
    /// Simulate feature allocations from the target or approximate marginal process.
    MarginalSim,
    /// Check the approximation inequalities over a grid of rounds and K.
    CheckConditions,
    /// Tabulate error bounds and check the binomial-Poisson sandwich.
    BoundsTable,
    /// Tabulate finite Dirichlet EPPF gaps and check their 1/K decay.
    EppfConvergence,
    /// Run Gibbs chains for the linear-Gaussian feature model.
    GibbsRun,
    /// Compare AIFA with the BFRY approximation.
    CompareIfa,
    /// Generate synthetic linear-Gaussian data.
    SynthData,
}

type Handler = fn(&Experiment, &mut OutputDir) -> Result<commands::Failures, RunError>;

impl Command {
    fn name_and_handler(self) -> (&'static str, Handler) {
        match self {
            Command::SamplePrior => ("sample-prior", commands::sample_prior),
            Command::MarginalSim => ("marginal-sim", commands::marginal_sim),
            Command::CheckConditions => ("check-conditions", commands::check_conditions),
            Command::BoundsTable => ("bounds-table", commands::bounds_table),
            Command::EppfConvergence => ("eppf-convergence", commands::eppf_convergence),
            Command::GibbsRun => ("gibbs-run", commands::gibbs_run),
            Command::CompareIfa => ("compare-ifa", commands::compare_ifa),
            Command::SynthData => ("synth-data", commands::synth_data),
        }
    }
}

fn run(cli: &Cli) -> Result<commands::Failures, RunError> {
    let started = Instant::now();
    let (name, handler) = cli.command.name_and_handler();
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Config("--config is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        replicates: cli.replicates,
        out: cli.out.clone(),
    };
    let exp = Experiment::load(name, path, &overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    let mut out = OutputDir::create(&exp.out)?;
    let failures = pool.install(|| handler(&exp, &mut out))?;
    out.manifest(&json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "config_sha256": exp.config_sha256,
        "seed": exp.seed,
        "replicates": exp.replicates,
        "files": out.files(),
        "checks_passed": failures.is_empty(),
        "failures": failures,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    }))?;
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(f) if f.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{}", json!({ "failures": failures }));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string(), "kind": e.kind() }));
            ExitCode::from(2)
        }
    }
}
