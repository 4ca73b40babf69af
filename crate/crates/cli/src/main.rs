//! `slitstone`: batch front end for the thin obstacle solver.
//!
//! Exit codes: 0 success, 1 other failure, 2 non-convergence, 3 invalid
//! configuration, 4 radius inside the contact closure (or inconsistent
//! expansion under `--strict`), 5 failed symmetry verdict, 6 no admissible
//! barrier.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] slitstone::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Strict(String),
    #[error("{0}")]
    Symmetry(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use slitstone::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Io(_) => 1,
            CliError::Strict(_) => 4,
            CliError::Symmetry(_) => 5,
            CliError::NotConverged(_) => 2,
            CliError::Core(e) => match e {
                E::CoefficientOutOfRange { .. }
                | E::LengthMismatch { .. }
                | E::InvalidDatum(_)
                | E::InvalidMesh(_)
                | E::InvalidOmega(_)
                | E::CircleOutsideMesh { .. } => 3,
                E::MaxIterExceeded { .. } | E::NotConverged => 2,
                E::RadiusBelowContactClosure { .. } => 4,
                E::NoAdmissibleTau { .. } | E::ProfileNotAdmissible { .. } | E::BarrierNotDominant { .. } => 6,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "slitstone", version, about = "Thin obstacle solver with data at infinity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve and write the solution file plus a JSON summary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract decay coefficients from a solution file (CSV).
    Expand {
        #[arg(long)]
        solution: PathBuf,
        /// Comma-separated radii; defaults to 0.5 L, 0.625 L, 0.75 L.
        #[arg(long)]
        radii: Option<String>,
        /// Number of coefficients; defaults to 2k − 2.
        #[arg(long)]
        n: Option<usize>,
        /// Fail (exit 4) when the radius spread exceeds the threshold.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-space classification of a solution file (JSON).
    Classify {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a conjugate pair and run the symmetry diagnostics.
    Pair {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Barrier construction; searches τ unless `--tau` is given.
    Barrier {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admissibility certificate for a profile.
    Admissible {
        /// Comma-separated α_1..α_{2k−2}.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out } => commands::solve(&config, out),
        Command::Expand { solution, radii, n, strict, out } => {
            commands::expand(&solution, radii.as_deref(), n, strict, out)
        }
        Command::Classify { solution, out } => commands::classify(&solution, out),
        Command::Pair { config, out } => commands::pair(&config, out),
        Command::Barrier { config, tau, out } => commands::barrier(&config, tau, out),
        Command::Admissible { alpha, out } => commands::admissible(&alpha, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
