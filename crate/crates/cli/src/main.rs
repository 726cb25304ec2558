//! `qw3`: eigenvalue search, eigenvector export and time evolution for
//! three-state quantum walks with a two-phase coin field.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qw3_core::spectral::DEFAULT_REFINE_TOL;

#[derive(Parser)]
#[command(name = "qw3", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a coin field, print its summary and exceptional set.
    Validate(FieldArgs),
    /// Tabulate |chi| on a uniform lambda grid.
    Scan {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 4000)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find and certify all eigenvalues.
    Roots {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the eigenvector of an accepted eigenvalue.
    Eigvec {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Eigenphase, as printed by `roots`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Sites kept beyond [x_minus, x_plus] on each side (default: until the tail is below 1e-12).
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a state localized at the origin and write its distribution.
    Evolve {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        t: usize,
        /// Half-width L of the window [-L, L] (default t + 5).
        #[arg(long)]
        window: Option<i64>,
        /// Internal state at the origin as "re1,im1,re2,im2,re3,im3" (normalized before use).
        #[arg(long, allow_hyphen_values = true)]
        psi0: Option<String>,
        /// Write every step with a leading time column.
        #[arg(long)]
        trajectory: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one of the four reference figures.
    Demo {
        figure: Figure,
        /// Index into theta = (pi/12, 3pi/12, 7pi/12, 11pi/12); all four if omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..4))]
        theta_index: Option<u8>,
        #[command(flatten)]
        search: SearchArgs,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Debug)]
#[group(required = true, multiple = false)]
struct FieldSource {
    /// JSON coin-field config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in field.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Args, Clone, Debug)]
pub struct FieldArgs {
    #[command(flatten)]
    source: FieldSource,
    /// Phase theta of the perturbed coin e^{i theta} F for presets.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
}

#[derive(Args, Clone, Copy, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 4000)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
    refine_tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Fourier coin everywhere except e^{i theta} F at the origin.
    OneDefectFourier,
    /// Fourier coin for x < 0, e^{i theta} F for x >= 0.
    TwoPhaseFourier,
    HomogeneousFourier,
    HomogeneousGrover,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// |chi| scans and eigenvalues, one-defect model.
    Fig1,
    /// Distribution at t = 100, one-defect model.
    Fig2,
    /// |chi| scans and eigenvalues, two-phase model.
    Fig3,
    /// Distribution at t = 100, two-phase model.
    Fig4,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QW3_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("QW3_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Validate(field) => commands::validate(&field),
        Command::Scan { field, grid, out } => commands::scan(&field, grid, out.as_deref()),
        Command::Roots { field, search, out } => commands::roots(&field, search, out.as_deref()),
        Command::Eigvec {
            field,
            search,
            lambda,
            window,
            out,
        } => commands::eigvec(&field, search, lambda, window, out.as_deref()),
        Command::Evolve {
            field,
            t,
            window,
            psi0,
            trajectory,
            out,
        } => commands::evolve(&field, t, window, psi0.as_deref(), trajectory, out.as_deref()),
        Command::Demo {
            figure,
            theta_index,
            search,
            out,
        } => commands::demo(figure, theta_index, search, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
