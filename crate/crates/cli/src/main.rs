//! `rydmol`: figure data for the kicked-rotor Rydberg molecule as CSV files
//! plus a `manifest.json`.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 when a
//! numerical guard trips, 1 for I/O failures.

mod commands;
mod config;
mod error;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::commands::{Command, Context};
use crate::config::{Derived, RunConfig};
use crate::error::CliError;
use crate::output::{sha256_hex, FileEntry, Staging};

#[derive(Debug, Parser)]
#[command(name = "rydmol", version, about = "Entanglement and chaos in a kicked-rotor Rydberg molecule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2, fig3, fig5, fig6, fig7, fig8, fig9, fig10.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat eigenvalue-search warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    command: &'static str,
    /// SHA-256 of the canonical config JSON.
    input_sha256: String,
    config: &'a RunConfig,
    derived: Derived,
    details: Map<String, Value>,
    warnings: Vec<String>,
    files: Vec<FileEntry>,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => RunConfig::from_json(presets::get(name)?),
        (None, None) => Err(CliError::Config("one of --config <path> or --preset <name> is required".into())),
    }
}

fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let cfg = load(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let derived = cfg.derived()?;
    let target = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut staging = Staging::new(&target)?;
    let mut ctx = Context { cfg: &cfg, strict: cli.strict, report: Default::default() };
    commands::run(cli.command, &mut ctx, &mut staging)?;
    for w in &ctx.report.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        input_sha256: sha256_hex(cfg.to_json().as_bytes()),
        config: &cfg,
        derived,
        details: ctx.report.details,
        warnings: ctx.report.warnings,
        files: staging.files().to_vec(),
    };
    staging.commit(&manifest)?;
    Ok(target)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
