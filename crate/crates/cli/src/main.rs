use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::Failure;
use config::RunConfig;

/// Layer potentials and Neumann problems for the Kohn-Laplacian on the
/// Heisenberg half-space.
#[derive(Parser, Debug)]
#[command(name = "kohn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; the stock configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fix the fundamental-solution constant and write a context file.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Context file to write (default: OUT/context.json).
        #[arg(long)]
        context: Option<PathBuf>,
    },
    /// Run the verification suite; exit 1 on any failed check.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        context: PathBuf,
        /// Comma-separated check groups.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Interior Neumann problem through a single-layer density.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        context: PathBuf,
        /// File of `x,y,t` lines at which to evaluate the solution.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Inhomogeneous problem through the Neumann function.
    Inhomogeneous {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        context: PathBuf,
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Error-versus-resolution table for the configured sweep.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        context: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Config),
        None => Ok(RunConfig::stock()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Calibrate { common, context } => {
            let cfg = load(&common)?;
            let path = context.unwrap_or_else(|| common.out.join("context.json"));
            commands::calibrate(&cfg, &path)
        }
        Command::Verify { common, context, checks } => commands::verify(&load(&common)?, &context, &common.out, checks),
        Command::Solve { common, context, points } => commands::solve(&load(&common)?, &context, &common.out, points.as_deref()),
        Command::Inhomogeneous { common, context, points } => {
            commands::inhomogeneous(&load(&common)?, &context, &common.out, points.as_deref())
        }
        Command::Converge { common, context } => commands::converge(&load(&common)?, &context, &common.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kohn: {f}");
            ExitCode::from(f.code())
        }
    }
}
