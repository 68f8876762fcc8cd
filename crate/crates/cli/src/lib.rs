//! Command-line experiment runner for pilot-aided nearest-neighbour decoding.
//!
//! Configuration comes from an optional TOML file with flag overrides. Every
//! run is seeded; identical settings give byte-identical outputs for any
//! thread count.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Artifact;
pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pilotgmi", version, about = "Pilot-aided channel estimation and GMI experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Variance,
    Gmi,
    Prelog,
    Simulate,
    ShowConfig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interpolation error variance against the window length.
    Variance(RunArgs),
    /// GMI lower bounds and pre-log slope over an SNR grid.
    Gmi(RunArgs),
    /// Pre-log reference values in exact arithmetic.
    Prelog(RunArgs),
    /// Frame error rate of the nearest-neighbour decoder.
    Simulate(RunArgs),
    /// Print the effective configuration as TOML.
    ShowConfig(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Command {
    pub fn split(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::Variance(a) => (CommandKind::Variance, a),
            Command::Gmi(a) => (CommandKind::Gmi, a),
            Command::Prelog(a) => (CommandKind::Prelog, a),
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::ShowConfig(a) => (CommandKind::ShowConfig, a),
        }
    }
}

/// Runs one subcommand on a validated configuration, on `threads` workers if set.
pub fn execute(kind: CommandKind, cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let psd = cfg.spectrum()?;
    let job = || match kind {
        CommandKind::Variance => commands::cmd_variance(cfg, &psd),
        CommandKind::Gmi => commands::cmd_gmi(cfg, &psd),
        CommandKind::Prelog => commands::cmd_prelog(cfg, &psd),
        CommandKind::Simulate => commands::cmd_simulate(cfg, &psd),
        CommandKind::ShowConfig => Ok(vec![Artifact { name: "config.toml".into(), contents: cfg.to_toml()? }]),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(job),
        None => job(),
    }
}

/// Writes every artifact into `out_dir`, or the main one to `stdout`.
pub fn emit(artifacts: &[Artifact], cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for a in artifacts {
                std::fs::write(dir.join(&a.name), &a.contents)?;
            }
        }
        None => {
            if let Some(a) = artifacts.first() {
                stdout.write_all(a.contents.as_bytes())?;
            }
        }
    }
    Ok(())
}

/// Parses, validates, runs and writes; warnings go to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (kind, args) = cli.command.split();
    let cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
    let psd = cfg.spectrum()?;
    for w in cfg.warnings(&psd) {
        writeln!(stderr, "warning: {w}")?;
    }
    let artifacts = execute(kind, &cfg)?;
    emit(&artifacts, &cfg, stdout)
}
