use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "berry",
    version,
    about = "Detect conical intersections through the Berry phase of a tracked variational ground state"
)]
pub struct Cli {
    /// Zero all wall-clock fields so repeated runs write identical files.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track the ground state around one loop and report the Berry phase.
    Run(RunArgs),
    /// Success probability over a grid of step counts and noise levels.
    Benchmark(BenchmarkArgs),
    /// Step, noise and shot budgets from problem constants.
    Bounds(BoundsArgs),
    /// Exact-diagonalization Berry phase and optional gap surface.
    Oracle(OracleArgs),
    /// Shot count for a target energy precision along a molecular loop.
    Shots(ShotsArgs),
}

#[derive(Debug, Args)]
pub struct TrackerArgs {
    /// Loop manifest file or `builtin:<name>`.
    #[arg(long = "loop", value_name = "FILE|builtin:NAME")]
    pub loop_ref: String,

    /// uccd, npf:<layers> or direct [default: direct for analytic loops, uccd otherwise]
    #[arg(long)]
    pub ansatz: Option<String>,

    /// Base tracker configuration (JSON); flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Regularized Newton update.
    #[arg(long)]
    pub reg: bool,

    /// Disable the line search inside the regularized update.
    #[arg(long)]
    pub no_backtrack: bool,

    #[arg(long)]
    pub fidelity: Option<f64>,

    #[arg(long)]
    pub m_thr: Option<f64>,

    /// Hadamard-test shots for the closing overlap.
    #[arg(long)]
    pub overlap_shots: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub tracker: TrackerArgs,

    #[arg(long)]
    pub steps: Option<usize>,

    #[arg(long, value_name = "VAR")]
    pub noise_sigma2_grad: Option<f64>,

    #[arg(long, value_name = "VAR")]
    pub noise_sigma2_hess: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Write the full report here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub tracker: TrackerArgs,

    #[arg(long, value_delimiter = ',', required = true, value_name = "N,..")]
    pub steps_list: Vec<usize>,

    /// Noise variance applied to both gradient and Hessian elements.
    #[arg(long, value_delimiter = ',', required = true, value_name = "VAR,..")]
    pub sigma2_list: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Sweep table (CSV).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Full report (JSON).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub lipschitz: f64,
    #[arg(long)]
    pub gdot_max: f64,
    #[arg(long)]
    pub n_params: usize,
    #[arg(long, default_value_t = 1.0)]
    pub grad_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hdot_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    /// Shots per Hessian element at unit variance.
    #[arg(long, default_value_t = 1.0)]
    pub mh: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "loop", value_name = "FILE|builtin:NAME")]
    pub loop_ref: String,

    /// Dense points for analytic loops; bundle loops use their own grid.
    #[arg(long, default_value_t = oracle_default_dense())]
    pub dense: usize,

    /// Parameter-plane grid (JSON) for a gap scan.
    #[arg(long, value_name = "FILE", requires = "gap_out")]
    pub gap_scan: Option<PathBuf>,

    /// Gap surface (CSV).
    #[arg(long, value_name = "FILE", requires = "gap_scan")]
    pub gap_out: Option<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn oracle_default_dense() -> usize {
    berry_core::oracle::DEFAULT_DENSE_POINTS
}

#[derive(Debug, Args)]
pub struct ShotsArgs {
    /// Bundle loop manifest.
    #[arg(long = "loop", value_name = "FILE")]
    pub loop_ref: PathBuf,

    /// Target standard deviation of the energy estimate (hartree).
    #[arg(long, default_value_t = 1e-3)]
    pub sigma: f64,

    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
