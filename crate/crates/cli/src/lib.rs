//! Command-line front end: configuration, artifact writing and dispatch.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{parse_config, parse_config_str, Overrides, RunConfig};
use crate::output::{Artifacts, Metadata};

/// Exit code for a completed run whose verdict is positive.
pub const EXIT_PASS: i32 = 0;
/// Exit code for a completed run with a negative verdict.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for configuration, numerical or i/o errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "entroflux", version, about = "Relative entropy and measure-valued solution diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// System identifier, overriding the configuration file.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed, overriding the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Size of the worker thread pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat any cell leaving the admissible domain as an error.
    #[arg(long, global = true)]
    pub strict_vacuum: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Certify the structural hypotheses on sampled states.
    CheckHypotheses,
    /// Run the finite-volume solver and write snapshots.
    Simulate,
    /// Estimate concentration masses over a resolution ladder.
    Concentration,
    /// Evaluate recession functions along rays.
    Recession,
    /// Relative entropy convergence probe against a fine reference.
    ProbeUniqueness,
    /// Fenchel-Young and essentially-stronger checks for the N-functions.
    OrliczSuite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckHypotheses => "check-hypotheses",
            Command::Simulate => "simulate",
            Command::Concentration => "concentration",
            Command::Recession => "recession",
            Command::ProbeUniqueness => "probe-uniqueness",
            Command::OrliczSuite => "orlicz-suite",
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let overrides =
        Overrides { system: cli.system.clone(), seed: cli.seed, out: cli.out.clone(), strict_vacuum: cli.strict_vacuum };
    Ok(match &cli.config {
        Some(path) => parse_config(path, &overrides)?,
        None => parse_config_str("", &overrides)?,
    })
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<(bool, Artifacts), CliError> {
    let mut art = Artifacts::new(&cfg.output.dir, Metadata::new(cfg), command.name())?;
    let pass = match command {
        Command::CheckHypotheses => commands::check_hypotheses(cfg, &mut art)?,
        Command::Simulate => commands::simulate(cfg, &mut art)?,
        Command::Concentration => commands::concentration(cfg, &mut art)?,
        Command::Recession => commands::recession_cmd(cfg, &mut art)?,
        Command::ProbeUniqueness => commands::probe_uniqueness(cfg, &mut art)?,
        Command::OrliczSuite => commands::orlicz_suite(cfg, &mut art)?,
    };
    Ok((pass, art))
}

/// Run a parsed command line, report on stdout/stderr and return the exit code.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return EXIT_ERROR;
        }
    }
    let outcome = load_config(cli).and_then(|cfg| dispatch(cli.command, &cfg));
    match outcome {
        Ok((pass, art)) => {
            for path in art.written() {
                println!("wrote {}", path.display());
            }
            println!("{}: {}", cli.command.name(), if pass { "pass" } else { "fail" });
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
