use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "coarselab", version, about = "Coarse distances, lattice geodesics and word metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grid_h: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_max: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Lattice distance between two points, optionally refined by shooting.
    Dist,
    /// Coarse distances between two points of a Sol-type group.
    Rho,
    /// Piecewise vertical/horocyclic path realizing the coarse distance.
    CoarsePath,
    /// Lattice distance against the closed-form coarse distance.
    VerifySol,
    /// Two frame metrics on a Heintze group.
    VerifyHeintze,
    /// Two frame metrics on a Sol-type group.
    VerifySoltype,
    /// Word lengths of the two lamplighter families under both generating sets.
    LamplighterTable,
    /// Ratio gap between the two lamplighter word metrics.
    LamplighterCertificate,
    /// Horocycle-avoiding paths in the hyperbolic plane.
    HoroballLemma,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => {
            if let Err(e) = commands::emit(&cli, &outcome.text) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed: {}", outcome.summary);
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
