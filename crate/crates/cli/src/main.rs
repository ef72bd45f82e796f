mod commands;
mod config;
mod output;
mod svg;

use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use config::{Command, RunConfig, Settings};

/// Spectra, level statistics and semiclassical densities of the quantum Rabi model.
#[derive(Debug, Parser)]
#[command(name = "rabi-esqpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with default settings; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn run(cli: Cli) -> Result<()> {
    let base = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let cfg = RunConfig::resolve(cli.command, cli.settings.over(base))?;
    let summary = commands::run(&cfg)?;
    let text = serde_json::to_string_pretty(&summary.metrics)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
