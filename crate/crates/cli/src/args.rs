use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qrfuse",
    version,
    about = "Joint quantile regression with fused quantile differences"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator and write its coefficients.
    Fit(FitArgs),
    /// Cross-validate the hyperparameter of GNCQR or FLQR.
    Cv(CvArgs),
    /// Run a Monte Carlo experiment.
    Simulate(SimulateArgs),
    /// Rolling-window quantile forecasts and scores.
    Forecast(ForecastArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scaling {
    /// Fit on covariates mapped to [0, 1], report original-scale coefficients.
    Unit,
    /// Fit on the covariates as given.
    None,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    /// Quantile levels as start:stop:step.
    #[arg(long, conflicts_with = "taus_list")]
    pub taus: Option<String>,

    /// Quantile levels as a comma-separated list.
    #[arg(long)]
    pub taus_list: Option<String>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Response column.
    #[arg(long)]
    pub response: String,

    /// Numeric columns to leave out of the covariates.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,

    #[arg(long, value_enum, default_value_t = Scaling::Unit)]
    pub scale: Scaling,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Candidate grid as n_linear:linear_hi:n_log:log_exponent_hi.
    #[arg(long, default_value = "100:1:200:6", conflicts_with = "values")]
    pub grid: String,

    /// Explicit comma-separated candidates.
    #[arg(long)]
    pub values: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// Print the run summary as JSON.
    #[arg(long)]
    pub json: bool,

    /// key=value file of flags; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub estimator: String,

    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[command(flatten)]
    pub taus: TauArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// gncqr or flqr.
    #[arg(long)]
    pub estimator: String,

    #[command(flatten)]
    pub hyper: HyperArgs,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Keep row order and drop this many rows either side of each
    /// validation block (hv-block). Without it rows are shuffled.
    #[arg(long)]
    pub gap: Option<usize>,

    #[arg(long, env = "QRFUSE_SEED")]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub taus: TauArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// y1, y2, y3 or y4.
    #[arg(long)]
    pub dgp: String,

    /// Sample size per replication.
    #[arg(long, default_value_t = 100)]
    pub t: usize,

    #[arg(long, default_value_t = 500)]
    pub reps: usize,

    /// Comma-separated estimators; GNCQR and FLQR are tuned unless
    /// --alpha or --lambda fixes them.
    #[arg(long, value_delimiter = ',', default_value = "qr,brw,gncqr,flqr")]
    pub estimators: Vec<String>,

    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[command(flatten)]
    pub hyper: HyperArgs,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Fresh evaluation points per replication.
    #[arg(long, default_value_t = 1000)]
    pub eval_points: usize,

    #[arg(long, env = "QRFUSE_SEED")]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub taus: TauArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Input CSV with a date column.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, default_value = "date")]
    pub date: String,

    #[arg(long)]
    pub target: String,

    /// Regressor columns; defaults to every other numeric column.
    #[arg(long, value_delimiter = ',')]
    pub regressors: Option<Vec<String>>,

    #[arg(long, default_value_t = 1)]
    pub horizon: usize,

    #[arg(long, default_value_t = 50)]
    pub window: usize,

    #[arg(long, value_delimiter = ',', default_value = "qr,brw,gncqr,flqr")]
    pub estimators: Vec<String>,

    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[command(flatten)]
    pub hyper: HyperArgs,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Re-select tuned hyperparameters every this many windows.
    #[arg(long)]
    pub reselect_every: Option<usize>,

    #[command(flatten)]
    pub taus: TauArgs,

    #[command(flatten)]
    pub out: OutArgs,
}
