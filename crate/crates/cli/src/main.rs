//! `fts`: simulate size studies, test pairs of functional samples, and build
//! and compare cumulative intraday return curves.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fts_core::simulation::{DEFAULT_BURN_IN, DEFAULT_GRID_POINTS};
use fts_core::{FtsError, KernelFamily};

#[derive(Parser, Debug)]
#[command(name = "fts", version, about = "Independence test for two functional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo size study: rejection rates of the test under a pair of DGPs.
    Simulate(SimulateArgs),
    /// Write one simulated functional sample as CSV.
    Generate(GenerateArgs),
    /// Test two functional samples (CSV files) for independence.
    Test(TestArgs),
    /// Turn a `date,time,price` file into cumulative intraday return curves.
    Cidr(CidrArgs),
    /// Test every pair of tickers given as `date,time,price` files.
    Pairwise(PairwiseArgs),
    /// Re-run the configuration embedded in a JSON simulation report.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dgp {
    Iid,
    Far1,
}

/// Kernel and window overrides shared by every command that runs the test.
#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// Lag horizon H (default ⌊n^{1/4}⌋).
    #[arg(long = "H", value_name = "H")]
    pub horizon: Option<usize>,
    /// Kernel for the centering estimator: bartlett, parzen or flattop.
    #[arg(long, default_value = "bartlett", value_parser = parse_kernel)]
    pub kernel1: KernelFamily,
    /// Kernel for the variance estimator.
    #[arg(long, default_value = "bartlett", value_parser = parse_kernel)]
    pub kernel2: KernelFamily,
    /// Window of the centering kernel (default ⌊n^{1/4}⌋).
    #[arg(long)]
    pub w1: Option<f64>,
    /// Window of the variance kernel (default ⌊H^{1/4}⌋).
    #[arg(long)]
    pub w2: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file (written atomically); standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub dgp: Dgp,
    /// DGP of the second sample (defaults to --dgp).
    #[arg(long, value_enum)]
    pub dgp_y: Option<Dgp>,
    /// FAR(1) operator scale, ψ(t,u) = q·min(t,u).
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Grid points per curve.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub m: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[command(flatten)]
    pub kernels: KernelArgs,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "FTS_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub dgp: Dgp,
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Replication index selecting the random stream.
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    /// Draw from the stream of the second sample of a pair.
    #[arg(long)]
    pub second: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// First sample (CSV; optional `#grid` header row).
    pub x: PathBuf,
    /// Second sample.
    pub y: PathBuf,
    #[command(flatten)]
    pub kernels: KernelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PanelArgs {
    /// Grid points of the resampled curves.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub m: usize,
    /// Trading session `HH:MM-HH:MM`; by default each day's first and last
    /// timestamps map to 0 and 1.
    #[arg(long)]
    pub session: Option<String>,
}

#[derive(Args, Debug)]
pub struct CidrArgs {
    /// `date,time,price` file.
    pub input: PathBuf,
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PairwiseArgs {
    /// One `date,time,price` file per ticker; the file stem is the ticker.
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub kernels: KernelArgs,
    #[arg(long, env = "FTS_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// JSON report written by `fts simulate --format json`.
    pub report: PathBuf,
    #[arg(long, env = "FTS_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kernel(s: &str) -> Result<KernelFamily, String> {
    s.parse().map_err(|e: FtsError| e.to_string())
}

/// Failure of a command, with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<FtsError> for CliError {
    fn from(e: FtsError) -> Self {
        let code = match &e {
            FtsError::InvalidGrid(_)
            | FtsError::HorizonTooLarge { .. }
            | FtsError::InvalidHorizon
            | FtsError::InvalidKernel(_)
            | FtsError::NonStationaryKernel { .. }
            | FtsError::InvalidDgp(_) => 2,
            FtsError::DegenerateVariance { .. } => 4,
            FtsError::GridMismatch
            | FtsError::LengthMismatch { .. }
            | FtsError::InvalidSample(_)
            | FtsError::Parse { .. }
            | FtsError::InvalidPrice { .. }
            | FtsError::DaySkipped { .. }
            | FtsError::Alignment(_)
            | FtsError::Io(_) => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Generate(args) => commands::generate(&args),
        Command::Test(args) => commands::test(&args),
        Command::Cidr(args) => commands::cidr(&args),
        Command::Pairwise(args) => commands::pairwise(&args),
        Command::Replay(args) => commands::replay(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
