//! Command-line front end: generate instances, run solvers, analyse small
//! Hamiltonians exactly, and fit time-to-solution curves, with every
//! artifact hashed into a manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;
mod error;
mod exact;
mod fit;
mod gen;
mod report;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifacts::Manifest;
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "CHIMERA_BENCH_WORKERS";

#[derive(Parser)]
#[command(name = "chimera-bench", version, about = "Planted-solution annealing benchmarks on Chimera graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the instance set described by a config.
    Gen {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every solver task on the generated instances; finished tasks are skipped.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Spectrum sweep and optional coherent evolution of a small instance.
    Exact(exact::ExactArgs),
    /// Quantile curves, optimal-effort fits and scaling fits from run results.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit tables in the bundled reference format.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certificate and invariant checks on instances.
    Verify {
        /// Check every instance listed in the config's instance manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Individual instance files.
        files: Vec<PathBuf>,
    },
}

fn init_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))
}

fn summarize(m: Manifest, dir: PathBuf) -> CliResult<()> {
    let m = m.into_result()?;
    println!("{}: {} file(s) in {}", m.stage, m.files.len(), dir.display());
    Ok(())
}

fn dispatch(cmd: Command) -> CliResult<()> {
    init_workers()?;
    match cmd {
        Command::Gen { config } => {
            let l = Loaded::read(&config)?;
            summarize(gen::cmd_gen(&l)?, l.instances_dir())
        }
        Command::Run { config } => {
            let l = Loaded::read(&config)?;
            summarize(run::cmd_run(&l)?, l.results_dir())
        }
        Command::Exact(args) => summarize(exact::cmd_exact(&args)?, args.out.clone()),
        Command::Fit { config } => {
            let l = Loaded::read(&config)?;
            summarize(fit::cmd_fit(&l)?, l.fits_dir())
        }
        Command::Report { config } => {
            let l = Loaded::read(&config)?;
            summarize(report::cmd_report(&l)?, l.report_dir())
        }
        Command::Verify { config, files } => {
            let l = config.as_deref().map(Loaded::read).transpose()?;
            match verify::cmd_verify(l.as_ref(), &files)? {
                0 => Ok(()),
                n => Err(CliError::data(format!("{n} check(s) failed"))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
