//! `eitlab`: batch runner for forward, DtN and stability experiments.

mod catalog;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::error::{exit_code, ValidationError, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "eitlab", version, about = "Forward, DtN and stability experiments for piecewise-constant admittivities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the scenario's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the scenario's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel stages.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiment kinds and their parameters.
    List {
        /// Emit the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let start = Instant::now();
    if let Some(n) = threads {
        if n == 0 {
            return Err(ValidationError::new("--threads: must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let text = std::fs::read_to_string(&config)
        .map_err(|e| ValidationError::new(format!("cannot read {}: {e}", config.display())))?;
    let mut scenario = config::parse(&text).with_context(|| format!("in {}", config.display()))?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let dir = run::output_dir(out, &scenario);
    let outcome = run::run_experiment(&scenario, &dir)?;
    run::write_manifest(&dir, &scenario, &outcome, start.elapsed().as_secs_f64())?;
    run::check(&outcome)?;
    println!("{}: wrote {} to {}", scenario.experiment.name(), outcome.outputs.join(", "), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, threads } => run(config, out, seed, threads),
        Command::List { json } => {
            let entries = catalog::catalog();
            if json {
                match serde_json::to_string_pretty(&entries) {
                    Ok(s) => {
                        println!("{s}");
                        Ok(())
                    }
                    Err(e) => Err(e.into()),
                }
            } else {
                print!("{}", catalog::render(&entries));
                Ok(())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
