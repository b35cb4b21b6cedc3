//! `triwave`: block-exact three-wave mixing toolkit.
//!
//! One subcommand per analysis: `spectrum`, `scan-ground`, `evolve`,
//! `compare-effective`, `coherent-energy`, `invariants`, `audit`.
//! Exit codes: 0 success, 1 validation error, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Error carrying the process exit code (1 validation, 2 numerical).
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<triwave::eigen::EigenError> for CliError {
    fn from(e: triwave::eigen::EigenError) -> Self {
        match e {
            triwave::eigen::EigenError::NoConvergence { .. } => Self::numerical(e.to_string()),
            triwave::eigen::EigenError::DimensionMismatch { .. } => Self::validation(e.to_string()),
        }
    }
}

impl From<triwave::dynamics::DynamicsError> for CliError {
    fn from(e: triwave::dynamics::DynamicsError) -> Self {
        match e {
            triwave::dynamics::DynamicsError::Eigen(inner) => inner.into(),
            other => Self::validation(other.to_string()),
        }
    }
}

impl From<triwave::models::ModelError> for CliError {
    fn from(e: triwave::models::ModelError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<triwave::fock::FockError> for CliError {
    fn from(e: triwave::fock::FockError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<triwave::opspec::OpspecError> for CliError {
    fn from(e: triwave::opspec::OpspecError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<triwave::analysis::AnalysisError> for CliError {
    fn from(e: triwave::analysis::AnalysisError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(format!("io error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "triwave",
    version,
    about = "Block-exact simulation and analysis of quantum three-wave mixing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of one conserved-quantity block.
    Spectrum(commands::SpectrumArgs),
    /// Ground energy of diagonal blocks against the block label.
    #[command(name = "scan-ground")]
    ScanGround(commands::ScanGroundArgs),
    /// Exact time evolution of a Fock or coherent initial state.
    Evolve(commands::EvolveArgs),
    /// Microscopic model against its reduced trilinear model, side by side.
    #[command(name = "compare-effective")]
    CompareEffective(commands::CompareEffectiveArgs),
    /// Closed-form coherent-state energies over an amplitude grid.
    #[command(name = "coherent-energy")]
    CoherentEnergy(commands::CoherentEnergyArgs),
    /// Conserved photon-number combinations of an interaction expression.
    Invariants(commands::InvariantsArgs),
    /// Sparse assembly plus commutator verification of an expression.
    Audit(commands::AuditArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override config values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format: json (default) or csv.
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(args) => commands::spectrum(args),
        Command::ScanGround(args) => commands::scan_ground(args),
        Command::Evolve(args) => commands::evolve(args),
        Command::CompareEffective(args) => commands::compare_effective(args),
        Command::CoherentEnergy(args) => commands::coherent_energy(args),
        Command::Invariants(args) => commands::invariants(args),
        Command::Audit(args) => commands::audit(args),
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message);
                e.code
            }
        },
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = err.print();
                0
            } else {
                // One-line diagnostic; clap's first line names the flag.
                let text = err.to_string();
                let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
                eprintln!("{line}");
                1
            }
        }
    };
    std::process::exit(code);
}
