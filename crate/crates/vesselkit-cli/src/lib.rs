//! Command-line front end: file formats, reports and the subcommands of the
//! `vesselkit` binary.

pub mod commands;
pub mod io;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Usage(_) => EXIT_IO,
            CliError::Check(_) => EXIT_CHECK,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(name = "vesselkit", version, about = "Operator vessels, compatibility systems and commutative dilations")]
pub struct Cli {
    /// Multiplies every acceptance tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Omit wall-clock timings so identical inputs give identical reports.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    pub deterministic: Toggle,
    /// Write the run report here instead of standard output.
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    TensorDoublyCommuting,
    Jordan,
    RandomDissipativePair,
    #[value(name = "decoupled-W")]
    DecoupledW,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the strict vessel of a problem file.
    Embed {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = vesselkit::vessel::DEFAULT_RANK_TOL)]
        rank_tol: f64,
    },
    /// Run vessel checks; all of them when no check is selected.
    Check {
        vessel: PathBuf,
        /// Vessel conditions.
        #[arg(long = "vessel")]
        conditions: bool,
        #[arg(long)]
        vr: bool,
        #[arg(long)]
        vrstar: bool,
        #[arg(long)]
        cone: bool,
        #[arg(long)]
        weakly_strict: bool,
        /// Direction for the VR and cone checks, e.g. "1,1".
        #[arg(long)]
        direction: Option<String>,
    },
    /// Write a seeded fixture problem.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        /// Factor sizes (tensor, decoupled-W) or the dimension n.
        #[arg(long, default_value = "2,2")]
        dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dilation experiments: identity, isometry, group law, commutativity.
    Dilate {
        vessel: PathBuf,
        /// Times separated by ';', coordinates by ',', e.g. "0.5,0.5;1,0".
        #[arg(long)]
        times: String,
        /// "N,L".
        #[arg(long, default_value = "2048,40")]
        grid: String,
        /// Number of grid levels (N doubles at each).
        #[arg(long, default_value_t = 1)]
        refine: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        direction: Option<String>,
    },
    /// Propagate the state along a line and dump the trajectory.
    Simulate {
        vessel: PathBuf,
        /// "ξ;η", e.g. "1,0;0,0".
        #[arg(long)]
        line: String,
        /// gaussian | zero | file:PATH
        #[arg(long, default_value = "gaussian")]
        input: String,
        /// basis:K | zero | random | comma-separated reals
        #[arg(long, default_value = "basis:0")]
        h: String,
        #[arg(long, default_value = "1024,20")]
        grid: String,
        /// Run even when ξ is outside the positivity cone.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-series solution of the compatibility system.
    Solve {
        vessel: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Ratio r of the geometric axis data b(k) = ξ r^{−k}.
        #[arg(long, default_value_t = 2.0)]
        ratio: f64,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Worker cap: VESSELKIT_THREADS when set, the available parallelism
/// otherwise.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("VESSELKIT_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n >= 1 => n,
        _ => avail,
    }
}

/// Maps `f` over `items` on at most `workers` threads, keeping the order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| s.spawn(|| part.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
