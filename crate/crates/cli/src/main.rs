//! `sigmak-lab`: bubble verification, radial shooting, homotopy continuation
//! and Harnack sweeps from the command line.
//!
//! Data goes to `--out` (stdout if absent); summaries go to stderr.
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

mod commands;
mod grid;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "sigmak-lab",
    version,
    about = "Numerics for σ_k-Yamabe type equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check σ_k(λ(A^u)) = 1 for a bubble and random Möbius images of it.
    VerifyBubble(VerifyArgs),
    /// Shoot the radial ODE from u(0) and compare with the bubble.
    SolveRadial(RadialArgs),
    /// Solve the radial Dirichlet problem by continuation from σ_1 to σ_k.
    Homotopy(HomotopyArgs),
    /// Harnack products of centered bubbles over a grid of scales and radii.
    HarnackSweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Seed for all random choices.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Comma-separated center coordinates; the origin if absent.
    #[arg(long)]
    pub center: Option<String>,
    /// Number of random Möbius images checked besides the bubble itself.
    #[arg(long, default_value_t = 3)]
    pub images: usize,
    /// Sample points per field.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct RadialArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub u0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub rmax: f64,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-12)]
    pub rtol: f64,
    /// Fixed step size; overrides --rtol.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct HomotopyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Radius of the ball.
    #[arg(long, default_value_t = 5.0)]
    pub rb: f64,
    /// Scale of the bubble that supplies the boundary value.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Mesh intervals.
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    /// Uniform steps in t from 0 to 1.
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Use the k-th root form of the operator.
    #[arg(long)]
    pub root: bool,
    /// Newton residual target.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Where to write the continuation trace (JSON).
    #[arg(long)]
    pub trace: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Bubble scales: v, lo:hi:N, lo:hi:Nlog or a comma list of these.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Ball radii, same syntax as --a.
    #[arg(long = "R", allow_hyphen_values = true)]
    pub r: String,
    /// Random Möbius images per grid cell.
    #[arg(long, default_value_t = 0)]
    pub images: usize,
}

/// A failed run: exit code and message.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl From<sigmak_core::Error> for Failure {
    fn from(e: sigmak_core::Error) -> Self {
        use sigmak_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::Io(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SIGMAK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            Failure::Config(format!(
                "SIGMAK_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::VerifyBubble(args) => commands::verify_bubble(&args),
        Command::SolveRadial(args) => commands::solve_radial(&args),
        Command::Homotopy(args) => commands::homotopy(&args),
        Command::HarnackSweep(args) => commands::harnack_sweep(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(2)
        }
    }
}
