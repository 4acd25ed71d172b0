//! `ultrana`: sweeps, reports and the acceptance suite from the command line.
//!
//! Exit status is 0 when every check passes, 1 when a check fails, and 2 on
//! a usage or configuration error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{CommonFlags, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters outside a precondition.
    Usage(String),
    /// A computation could not complete.
    Failed(String),
}

impl From<ultrana_core::Error> for CliError {
    fn from(e: ultrana_core::Error) -> Self {
        use ultrana_core::Error::*;
        match e {
            Index(_) | Domain(_) | Precondition(_) | Range(_) | Singularity(_) => CliError::Usage(e.to_string()),
            Resource(_) | Precision(_) | ToleranceNotMet(_) => CliError::Failed(e.to_string()),
        }
    }
}

/// What a command produced: the data file body and whether its checks passed.
pub struct Outcome {
    pub data: String,
    pub passed: bool,
    pub summary: Value,
}

#[derive(Parser)]
#[command(name = "ultrana", version, about = "Verification engine for log-type ultra-analytic derivative bounds")]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lemma checks on the split weights a_j
    Majorant(commands::MajorantArgs),
    /// Bootstrap ratio R(n) over the geometric grid
    BootstrapRatio(commands::BootstrapArgs),
    /// Propagate derivative bounds through the recurrence
    Propagate(commands::PropagateArgs),
    /// Fit the envelope constant K to propagated bounds or to the sharp example
    FitK(commands::FitKArgs),
    /// Sup-norm brackets and falsification searches on the sharp example
    Sharp(commands::SharpArgs),
    /// Multi-index identities
    Multiindex(commands::MultiindexArgs),
    /// Bessel potential kernel tables and bound ratios
    Kernel(commands::KernelArgs),
    /// Hölder seminorm estimates
    Holder(commands::HolderArgs),
    /// Run the acceptance criteria
    Acceptance(commands::AcceptanceArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Majorant(_) => "majorant",
            Command::BootstrapRatio(_) => "bootstrap-ratio",
            Command::Propagate(_) => "propagate",
            Command::FitK(_) => "fit-k",
            Command::Sharp(_) => "sharp",
            Command::Multiindex(_) => "multiindex",
            Command::Kernel(_) => "kernel",
            Command::Holder(_) => "holder",
            Command::Acceptance(_) => "acceptance",
        }
    }
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Majorant(a) => commands::majorant(a, cfg),
        Command::BootstrapRatio(a) => commands::bootstrap_ratio(a, cfg),
        Command::Propagate(a) => commands::propagate(a, cfg),
        Command::FitK(a) => commands::fit_k(a, cfg),
        Command::Sharp(a) => commands::sharp(a, cfg),
        Command::Multiindex(a) => commands::multiindex(a, cfg),
        Command::Kernel(a) => commands::kernel(a, cfg),
        Command::Holder(a) => commands::holder(a, cfg),
        Command::Acceptance(a) => commands::acceptance(a, cfg),
    }
}

fn metadata_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_outputs(command: &str, cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Failed(format!("cannot write {}: {e}", p.display()));
    match &cfg.output_path {
        None => print!("{}", outcome.data),
        Some(path) => {
            std::fs::write(path, &outcome.data).map_err(|e| io(path, e))?;
            let meta = json!({
                "command": command,
                "created": chrono::Utc::now().to_rfc3339(),
                "precision_bits": cfg.precision_bits,
                "format": format!("{:?}", cfg.format).to_lowercase(),
                "passed": outcome.passed,
                "summary": outcome.summary,
                "version": env!("CARGO_PKG_VERSION"),
            });
            let meta_path = metadata_path(path);
            let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
            std::fs::write(&meta_path, text + "\n").map_err(|e| io(&meta_path, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::merge(&cli.common).and_then(|cfg| {
        let outcome = dispatch(&cli.command, &cfg)?;
        write_outputs(cli.command.name(), &cfg, &outcome)?;
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ultrana: one or more checks failed");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("ultrana: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("ultrana: {msg}");
            ExitCode::from(1)
        }
    }
}
