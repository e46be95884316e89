//! Batch front end: every command writes `report.txt`, a `report.json`
//! sidecar and its CSV tables into the output directory.
//!
//! Exit status: 0 success, 1 verdict FAIL, 2 input error, 3 numerical error.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use holonomy_lab::Error;

pub use output::Artifacts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "holonomy-lab", version, about = "Parallel transport and holonomy on chart-level Riemannian and K-contact manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check metric symmetry, positivity and the contact/Reeb/K-contact conditions.
    Validate(CommonArgs),
    /// Dump connection coefficients on a grid of points.
    Coeffs(CommonArgs),
    /// Transport along the curve given in the config or by --curve.
    Transport(CommonArgs),
    /// Sample holonomy over seeded rectangle loops at the base point.
    Holonomy(CommonArgs),
    /// Invariant decomposition of a sampled or imported holonomy sample.
    Decompose(CommonArgs),
    /// Compare adapted holonomy along lifts with quotient holonomy.
    VerifyIsomorphism(CommonArgs),
    /// Compare invariant splittings upstairs and on the quotient.
    Derham(CommonArgs),
    /// Off-block entries of holonomy for a block-product metric.
    ProductCheck(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Coeffs(_) => "coeffs",
            Command::Transport(_) => "transport",
            Command::Holonomy(_) => "holonomy",
            Command::Decompose(_) => "decompose",
            Command::VerifyIsomorphism(_) => "verify-isomorphism",
            Command::Derham(_) => "derham",
            Command::ProductCheck(_) => "product-check",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Validate(a)
            | Command::Coeffs(a)
            | Command::Transport(a)
            | Command::Holonomy(a)
            | Command::Decompose(a)
            | Command::VerifyIsomorphism(a)
            | Command::Derham(a)
            | Command::ProductCheck(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Built-in manifold.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub catalog: Option<String>,
    /// TOML manifold config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RK4 steps per unit parameter length.
    #[arg(long, default_value_t = 512)]
    pub steps: usize,
    /// Number of sampled loops.
    #[arg(long, default_value_t = 20)]
    pub loops: usize,
    /// Loop scale (default: the entry's recommended scale).
    #[arg(long)]
    pub scale: Option<f64>,
    /// RNG seed; required for commands that sample loops.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pass/fail tolerance of the command (see README).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, default_value_t = 1e-6)]
    pub svd_tol: f64,
    /// Validation sample count, or grid points per axis for coeffs.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Curve generator, e.g. "latitude(pi/3)"; overrides the config curve.
    #[arg(long)]
    pub curve: Option<String>,
    /// CSV of holonomy matrices (m_r_c columns) to decompose instead of sampling.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// Also report the nearest metric isometry of the transport matrix.
    #[arg(long)]
    pub project: bool,
    /// Output directory.
    #[arg(long, default_value = "holonomy-lab-out")]
    pub out: PathBuf,
}

/// Maps a library error to an exit status.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Runs a parsed command, writing artifacts; returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let name = cli.command.name();
    match commands::execute(&cli.command) {
        Ok(artifacts) => match artifacts.write(&cli.command.args().out) {
            Ok(()) => {
                println!("{}", artifacts.summary());
                if artifacts.passed {
                    EXIT_OK
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("{name}: cannot write output: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            eprintln!("{name}: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs; clap usage errors exit with 2.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}
