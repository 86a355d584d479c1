use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use vcorr::StepDist;

#[derive(Debug, Parser)]
#[command(name = "vcorr", version, about = "Moments of the empirical correlation of independent Wiener processes")]
pub struct Cli {
    /// Record wall-clock seconds in the manifest (makes outputs run-dependent).
    #[arg(long, global = true)]
    pub record_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo moment table and histogram of theta.
    Simulate(SimulateArgs),
    /// Analytic values.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
    /// Numerical checks of identities; exit 1 when outside tolerance.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Gaussian,
    Rademacher,
}

impl From<StepArg> for StepDist {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::Gaussian => StepDist::Gaussian,
            StepArg::Rademacher => StepDist::Rademacher,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Steps per path.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of replications.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: $VC_WORKERS, else 1].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Highest moment order (even).
    #[arg(long)]
    pub max_moment: Option<usize>,
    /// Histogram bins over [-1, 1].
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub step_dist: Option<StepArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON or TOML file with the same keys as the flags, or an earlier output.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCommand {
    /// E[theta^2] from the explicit double integral.
    SecondMoment(QuadArgs),
    /// The moment generating function F(beta1, beta2, a).
    Mgf {
        #[arg(long, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta2: f64,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
    },
    /// E[theta^(2n)] from the series in the s_r coefficients.
    Moment {
        #[arg(long)]
        n: usize,
        /// Largest r in the series.
        #[arg(long, default_value_t = vcorr::moments::DEFAULT_R_MAX)]
        r_max: usize,
        /// Radius of the extraction circle in v.
        #[arg(long, default_value_t = 0.9)]
        v_radius: f64,
        #[arg(long, default_value_t = 512)]
        node_count: usize,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct QuadArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 60.0)]
    pub u_max: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub diag_eps: f64,
    #[arg(long, default_value_t = 20_000_000)]
    pub max_evals: u64,
}

impl From<QuadArgs> for vcorr::QuadratureSpec {
    fn from(q: QuadArgs) -> Self {
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            u_max: q.u_max,
            diag_eps: q.diag_eps,
            max_evals: q.max_evals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LhsSource {
    /// Moments of order 4 and up from the s_r series.
    Series,
    /// Moments of order 4 and up from simulation.
    Montecarlo,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Generating identity: moment series against the double integral of z dF/dz.
    Generating {
        #[arg(long)]
        z: f64,
        #[arg(long, value_enum, default_value_t = LhsSource::Series)]
        lhs_source: LhsSource,
        /// Simulation size when the left side uses Monte Carlo moments.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Quadratic form X_12 against the centred cross moment Y_12 on simulated pairs.
    Prop1 {
        /// Grid size.
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Truncated Fredholm product against its closed form.
    Fredholm {
        #[arg(long, default_value_t = 1.0)]
        beta1: f64,
        #[arg(long, default_value_t = 1.0)]
        beta2: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 10_000)]
        terms: usize,
    },
}
