//! Command-line surface. Every subcommand's arguments serialize to the
//! `flags` object of its manifest, keyed by the same names a `--config` file
//! uses.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "denoiselab", version, about = "Analytic diffusion denoisers, distillation and diagnostics")]
pub struct Cli {
    /// JSON object whose keys mirror the subcommand's flags; explicit flags win.
    /// A manifest written by a previous run is accepted too.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical mean and covariance eigendecomposition of a dataset.
    Stats(StatsArgs),
    /// Probability-flow ODE samples and trajectories.
    Sample(SampleArgs),
    /// Fit affine denoisers to a teacher at each noise level.
    Distill(DistillArgs),
    /// Metric sweeps over a noise schedule, or a GL score of samples.
    Metrics(MetricsArgs),
    /// Self-contained numerical checks with a PASS/FAIL verdict.
    Verify(VerifyArgs),
    /// Train one small MLP denoiser per noise level.
    TrainToy(TrainToyArgs),
    /// Jacobian singular triplets of a denoiser at one noisy point.
    Jacobian(JacobianArgs),
    /// Answer denoiser plugin requests on stdin/stdout.
    ServePlugin(ServeArgs),
    /// Line plot of metric series CSVs.
    Plot(PlotArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats(_) => "stats",
            Command::Sample(_) => "sample",
            Command::Distill(_) => "distill",
            Command::Metrics(_) => "metrics",
            Command::Verify(_) => "verify",
            Command::TrainToy(_) => "train-toy",
            Command::Jacobian(_) => "jacobian",
            Command::ServePlugin(_) => "serve-plugin",
            Command::Plot(_) => "plot",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory [default: $DENOISELAB_OUT, else ./denoiselab-out].
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Master seed; per-item seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset: CSV file, raw-f64 container, or directory of PGM images.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Dataset format; inferred from the path when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Raw,
    Pgm,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 0.002)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 80.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 7.0)]
    pub rho: f64,
    /// Number of schedule levels.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// multi-delta | gaussian | affine:PATH | toy:PATH | external:"CMD ARGS"
    #[arg(long, default_value = "gaussian")]
    pub denoiser: String,
    /// Follow the closed-form Gaussian trajectory of the data instead of
    /// integrating the ODE.
    #[arg(long)]
    pub closed_form: bool,
    /// Number of samples.
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// State dimension when no dataset is given.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Write one trajectory CSV per sample.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub trajectories: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Adam,
    Gd,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistillArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Teacher denoiser spec.
    #[arg(long, default_value = "multi-delta")]
    pub teacher: String,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,4")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = Optimizer::Adam)]
    pub optimizer: Optimizer,
    /// Anneal the learning rate linearly to zero.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub lr_decay: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Linearity,
    ScoreDiff,
    Gl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Cosine,
    Nmse,
    Rmse,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = MetricKind::Linearity)]
    pub metric: MetricKind,
    /// cosine or nmse for linearity, rmse or nmse for score-diff.
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long, default_value = "gaussian")]
    pub denoiser: String,
    /// Second denoiser for score-diff.
    #[arg(long, default_value = "gaussian")]
    pub reference: String,
    /// Generated samples for the GL score (CSV or raw-f64 container).
    #[arg(long, value_name = "PATH")]
    pub samples: Option<PathBuf>,
    /// Monte-Carlo draws per level.
    #[arg(long, default_value_t = denoiselab::metrics::DEFAULT_SAMPLES)]
    pub n: usize,
    #[arg(long, default_value_t = denoiselab::metrics::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = denoiselab::metrics::DEFAULT_BETA)]
    pub beta: f64,
    /// Also emit an SVG plot of the series.
    #[arg(long)]
    pub svg: bool,
    /// State dimension for external denoisers when no dataset is given.
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Theorem1,
    Trajectory,
    Memorize,
    Orthogonality,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Pass threshold; each suite has its own default.
    #[arg(long, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,
    /// Dimension of the synthetic data.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of synthetic training samples.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Optimizer steps (theorem1) or sampler steps (trajectory, memorize).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Random trials (trajectory, memorize) or Monte-Carlo draws (orthogonality).
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainToyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Comma-separated noise levels, one model each.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// dae or skip.
    #[arg(long, default_value = "dae")]
    pub mode: String,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub val_size: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JacobianArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "gaussian")]
    pub denoiser: String,
    #[arg(long)]
    pub sigma: f64,
    /// Data row the noisy point is built from.
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    /// Number of singular triplets to keep.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = denoiselab::jacobian::DEFAULT_STEP)]
    pub step: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// echo | multi-delta | gaussian | affine:PATH | toy:PATH
    #[arg(long, default_value = "echo")]
    pub target: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    /// Comma-separated series CSVs (columns sigma,value,...).
    #[arg(long, value_delimiter = ',', required = true)]
    pub series: Vec<PathBuf>,
    #[arg(long, default_value = "")]
    pub title: String,
    /// File name of the SVG inside the output directory.
    #[arg(long, default_value = "plot.svg")]
    pub name: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Output directory [default: the manifest's directory].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
