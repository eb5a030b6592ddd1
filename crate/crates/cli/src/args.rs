use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use swtcast::padding::PadMethod;
use swtcast::pipeline::{Approach, ModelKind};

/// Day-ahead PV forecasting with stationary-wavelet features.
#[derive(Debug, Parser)]
#[command(name = "swtcast", version, about)]
pub struct Cli {
    /// TOML experiment file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Root seed for synthesis, forest bootstraps and CNN initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary wavelet decomposition of a series or, day by day with
    /// causal padding, of a daily matrix.
    Decompose(DecomposeArgs),
    /// Train on the first days, forecast the rest, write reports.
    Forecast(ForecastArgs),
    /// Run a grid of wavelet settings and models.
    Sweep(SweepArgs),
    /// Intra-day and trans-day historical volatility per site and in aggregate.
    Volatility(VolatilityArgs),
    /// Generate synthetic PV data.
    Synth(SynthArgs),
    /// Download dispatch archives into the cache and convert them to CSV.
    Fetch(FetchArgs),
}

/// Where the PV data comes from. At most one of `--input`, `--matrix` and
/// `--synth-days` may be given.
#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Long CSV: a timestamp column and one MW column per site.
    #[arg(long, conflicts_with_all = ["matrix", "synth_days"])]
    pub input: Option<PathBuf>,

    /// Matrix CSV: one row per date, one column per time step.
    #[arg(long, conflicts_with = "synth_days")]
    pub matrix: Option<PathBuf>,

    /// Generate this many synthetic days instead of reading a file.
    #[arg(long)]
    pub synth_days: Option<usize>,

    /// Synthetic sites (summed into the aggregate series).
    #[arg(long)]
    pub sites: Option<usize>,

    /// Synthetic cloud-noise level.
    #[arg(long)]
    pub cloud_noise: Option<f64>,

    /// Timestamp column of the long CSV.
    #[arg(long)]
    pub timestamp_column: Option<String>,

    /// Comma-separated site columns of the long CSV (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// A single-column series file, or a matrix CSV (header starting with `date`).
    #[arg(long)]
    pub input: PathBuf,

    /// Daubechies order (1..=7).
    #[arg(long, default_value_t = 4)]
    pub order: usize,

    /// Decomposition level (1..=4).
    #[arg(long, default_value_t = 2)]
    pub level: usize,

    /// Right padding for the daily decomposition of a matrix: REP or LR.
    #[arg(long, default_value = "REP")]
    pub padding: PadMethod,
}

#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// DIRECT, MM, MC or MI.
    #[arg(long)]
    pub approach: Option<Approach>,

    /// PERSISTENCE, LR, RF or CNN.
    #[arg(long)]
    pub model: Option<ModelKind>,

    /// Daubechies order; wavelet approaches default to 4.
    #[arg(long)]
    pub order: Option<usize>,

    /// Decomposition level; wavelet approaches default to 2.
    #[arg(long)]
    pub level: Option<usize>,

    /// REP or LR; wavelet approaches default to REP.
    #[arg(long)]
    pub padding: Option<PadMethod>,

    /// Leading days used for training.
    #[arg(long)]
    pub train_days: Option<usize>,

    /// Trees per forest.
    #[arg(long)]
    pub trees: Option<usize>,

    /// CNN epoch limit.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Also run the same model without wavelets and report the MAE
    /// improvement and per-month rank-sum p-values.
    #[arg(long)]
    pub baseline: bool,

    /// Save the fitted forecaster as JSON.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Comma-separated Daubechies orders.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,

    /// Comma-separated decomposition levels.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,

    /// Comma-separated padding methods.
    #[arg(long, value_delimiter = ',')]
    pub paddings: Option<Vec<PadMethod>>,

    /// Comma-separated approaches.
    #[arg(long, value_delimiter = ',')]
    pub approaches: Option<Vec<Approach>>,

    /// Comma-separated models.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,

    /// Skip the wavelet-free baseline runs.
    #[arg(long)]
    pub no_baseline: bool,
}

#[derive(Debug, Args)]
pub struct VolatilityArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Readings below this many MW are raised to it before taking logs.
    #[arg(long)]
    pub floor: Option<f64>,

    /// Only the first N days of each series.
    #[arg(long)]
    pub first_days: Option<usize>,

    /// Multiplier applied to the reported sigmas (100 gives percent).
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub days: Option<usize>,

    #[arg(long)]
    pub sites: Option<usize>,

    #[arg(long)]
    pub capacity_mw: Option<f64>,

    #[arg(long)]
    pub cloud_noise: Option<f64>,

    #[arg(long)]
    pub seasonal_amplitude: Option<f64>,

    /// First date (YYYY-MM-DD).
    #[arg(long)]
    pub start: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Archive directory URL.
    #[arg(long)]
    pub base_url: Option<String>,

    /// First day (YYYY-MM-DD).
    #[arg(long)]
    pub start: Option<NaiveDate>,

    /// Last day, inclusive.
    #[arg(long)]
    pub end: Option<NaiveDate>,

    /// Comma-separated unit identifiers to extract into the long CSV.
    #[arg(long, value_delimiter = ',')]
    pub duids: Option<Vec<String>>,

    /// Cache directory.
    #[arg(long, env = "SWTCAST_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,

    /// File name pattern with a `{date}` placeholder.
    #[arg(long)]
    pub template: Option<String>,

    /// Attempts per file after the first.
    #[arg(long)]
    pub retries: Option<usize>,
}
