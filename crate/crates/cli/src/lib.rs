//! Command-line front end for `trigzeros`.
//!
//! Every subcommand writes one data file (CSV or JSON) and one
//! [`RunManifest`](manifest::RunManifest). With `--out PATH` the data goes to
//! `PATH` and the manifest to `PATH.manifest.json`; otherwise data goes to
//! stdout and the manifest to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 spectral hypotheses (or model
//! validity) violated, 3 numerical non-convergence.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "trigzeros",
    version,
    about = "Expected number of real zeros of random trigonometric polynomials with correlated coefficients"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Global {
    /// Write data to PATH and the run manifest to PATH.manifest.json.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output encoding (default csv; json for `validate`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for Monte Carlo runs (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for quadrature and Monte Carlo.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file supplying any flag; flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Correlation model as `kind[:key=value,...]`: `iid`, `geometric:r=0.5`,
    /// `fgn:H=0.75`, `tabulated:0=1,1=0.4`.
    #[arg(long, value_name = "SPEC")]
    pub model: Vec<String>,
    /// Extra `key=value,...` parameters applied to every model.
    #[arg(long, value_name = "LIST")]
    pub params: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Left end of the grid; accepts multiples of pi such as `0.5pi`.
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<String>,
    /// Right end of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the spectral hypotheses: integrable density bounded below.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Grid size for the infimum search.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Tabulate the spectral density of one or more models.
    Spectral {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Tabulate the kernels L_n (and K_n, K_n' with --fejer).
    Kernels {
        /// Degrees (repeatable).
        #[arg(long)]
        n: Vec<usize>,
        /// Also emit K_n and K_n'.
        #[arg(long)]
        fejer: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Tabulate var F_n, var F_n' and their covariance over t.
    Covariance {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Kac-Rice expected zero counts.
    Kacrice {
        #[command(flatten)]
        model: ModelArgs,
        /// Degrees (repeatable).
        #[arg(long)]
        n: Vec<usize>,
        /// `lo:hi`, default `0:2pi`.
        #[arg(long)]
        interval: Option<String>,
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Panel-doubling budget of the quadrature.
        #[arg(long)]
        max_refinements: Option<usize>,
        /// Gauss-Legendre order per panel.
        #[arg(long)]
        points_per_panel: Option<usize>,
    },
    /// Convergence table of E[N_n]/n toward its limit.
    Theorem1 {
        #[command(flatten)]
        model: ModelArgs,
        /// Degrees (repeatable).
        #[arg(long)]
        n: Vec<usize>,
        #[arg(long)]
        interval: Option<String>,
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Add a Monte Carlo column with this many trials per degree.
        #[arg(long, value_name = "TRIALS")]
        montecarlo: Option<usize>,
        #[arg(long)]
        oversampling: Option<usize>,
    },
    /// Monte Carlo zero counts from sampled coefficients.
    Montecarlo {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        interval: Option<String>,
        #[arg(long)]
        oversampling: Option<usize>,
        /// Add the Kac-Rice value and the z-score of the difference.
        #[arg(long)]
        compare: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Spectral { .. } => "spectral",
            Command::Kernels { .. } => "kernels",
            Command::Covariance { .. } => "covariance",
            Command::Kacrice { .. } => "kacrice",
            Command::Theorem1 { .. } => "theorem1",
            Command::Montecarlo { .. } => "montecarlo",
        }
    }
}

/// Bad arguments detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_HYPOTHESES: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use trigzeros::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::HypothesesViolated { .. } | E::Degenerate { .. })
        | Some(E::NotPositiveDefinite { .. } | E::Embedding { .. }) => EXIT_HYPOTHESES,
        Some(E::NonConvergence { .. } | E::InternalConsistency(_)) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
