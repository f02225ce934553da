//! Command implementations behind the `qktsne` binary.
//!
//! Each subcommand is a plain function taking parsed arguments, so tests
//! and the acceptance suite drive the same code path as the executable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub mod digits;
pub mod knn;
pub mod meta;
pub mod plot;
pub mod transform;
pub mod vqe_trace;

pub use digits::{run_digits, DigitsArgs, DigitsOutcome, KernelKind};
pub use knn::{run_knn, KnnArgs};
pub use plot::{run_plot, PlotArgs};
pub use transform::{run_transform, TransformArgs};
pub use vqe_trace::{run_vqe_trace, VqeOutcome, VqeTraceArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] qktsne_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(qktsne_core::Error::InfeasiblePerplexity { .. }) => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    #[default]
    Reuse,
    Recompute,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reuse cached Gram matrices and trajectories, or recompute them.
    #[arg(long, global = true, value_enum, default_value_t = CachePolicy::Reuse)]
    pub cache: CachePolicy,
}

impl Default for GlobalArgs {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            cache: CachePolicy::Reuse,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qktsne", version, about = "Quantum-kernel t-SNE experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed the hand-written digits with a fidelity or Gaussian kernel.
    Digits(DigitsArgs),
    /// k-NN cross-validation on an embedding CSV.
    Knn(KnnArgs),
    /// Embed variational eigensolver trajectories of a transverse-field Ising chain.
    VqeTrace(VqeTraceArgs),
    /// Map new samples through a saved model.
    Transform(TransformArgs),
    /// Render a points CSV as SVG.
    Plot(PlotArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A pool may already exist when commands run in-process more than once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Digits(a) => run_digits(&cli.global, a).map(|_| ()),
        Command::Knn(a) => run_knn(&cli.global, a).map(|_| ()),
        Command::VqeTrace(a) => run_vqe_trace(&cli.global, a).map(|_| ()),
        Command::Transform(a) => run_transform(&cli.global, a),
        Command::Plot(a) => run_plot(&cli.global, a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
