use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_support::selection::DEFAULT_K;
use spectral_support::{Algorithm, Task};

#[derive(Debug, Parser)]
#[command(
    name = "spectral-support",
    version,
    about = "Learn the support of a distribution with spectrally regularized kernel operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and save it with its eigenvalue decay.
    Train(TrainArgs),
    /// Score test points with a saved model.
    Score(ScoreArgs),
    /// AUC, grid Hausdorff distance and d_μ of a saved model.
    Eval(EvalArgs),
    /// Scores over a λ × τ grid from one decomposition.
    Sweep(SweepArgs),
    /// Write samples and reference grids of a synthetic task.
    Synth(SynthArgs),
    /// Monte-Carlo checks of the concentration and Bernstein bounds.
    VerifyBounds(VerifyArgs),
}

/// Bandwidth choice: `auto`, `auto:<k>` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaChoice {
    Auto(usize),
    Value(f64),
}

impl FromStr for SigmaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(SigmaChoice::Auto(DEFAULT_K));
        }
        if let Some(k) = s.strip_prefix("auto:") {
            return k
                .parse()
                .map(SigmaChoice::Auto)
                .map_err(|_| format!("`{k}` is not a neighbour count"));
        }
        s.parse()
            .map(SigmaChoice::Value)
            .map_err(|_| format!("expected auto, auto:<k> or a number, got `{s}`"))
    }
}

/// Regularization choice: `auto`, `rate:<s>,<b>` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Auto,
    Rate { s: f64, b: f64 },
    Value(f64),
}

impl FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(LambdaChoice::Auto);
        }
        if let Some(rest) = s.strip_prefix("rate:") {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| format!("expected rate:<s>,<b>, got `{s}`"))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{t}` is not a number"))
            };
            return Ok(LambdaChoice::Rate {
                s: num(a)?,
                b: num(b)?,
            });
        }
        s.parse()
            .map(LambdaChoice::Value)
            .map_err(|_| format!("expected auto, rate:<s>,<b> or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterName {
    Tikhonov,
    Cutoff,
    Landweber,
    Kpca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Text,
    Binary,
}

/// Where the training sample comes from.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training data, comma- or whitespace-separated.
    #[arg(long, conflicts_with = "task")]
    pub data: Option<PathBuf>,
    /// Skip the first non-comment line of CSV input.
    #[arg(long)]
    pub header: bool,
    /// Zero-based column holding integer labels.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Keep only training rows with this label.
    #[arg(long, requires = "label_column")]
    pub label: Option<i64>,
    /// Synthetic task: circle, segment, two-moons[:noise], two-circles,
    /// noisy-circle[:eta], cube[:dim].
    #[arg(long)]
    pub task: Option<Task>,
    /// Sample size for --task.
    #[arg(short, long, default_value_t = 200)]
    pub n: usize,
    /// Draw only this mixture component of --task.
    #[arg(long, requires = "task")]
    pub component: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Kernel, filter and threshold.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// abel, l1exp, gaussian, linear (normalized), or a full spec such as
    /// `kernel=product factors=abel(1)@0..1;abel(2)@1..2`.
    #[arg(long, default_value = "abel")]
    pub kernel: String,
    /// Kernel width: auto[:k] takes the median k-th neighbour distance.
    #[arg(long, default_value = "auto")]
    pub sigma: SigmaChoice,
    #[arg(long, value_enum, default_value_t = FilterName::Tikhonov)]
    pub filter: FilterName,
    /// auto picks the curvature knee of the spectrum; rate:s,b uses n^(-1/(2s+b+1)).
    #[arg(long, default_value = "auto")]
    pub lambda: LambdaChoice,
    /// Landweber iterations.
    #[arg(long, default_value_t = 100)]
    pub m: u32,
    /// Number of components kept by the kpca filter, instead of a λ threshold.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Membership threshold: x is in the set iff F(x) ≥ 1 − τ.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Leave the `generated` line out of CSV headers.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Model file to write.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Eigenvalue-decay CSV; defaults to `<out>.spectrum.csv`.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FileFormat::Text)]
    pub format: FileFormat,
    /// Store the eigendecomposition so loading skips it.
    #[arg(long)]
    pub include_decomposition: bool,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Points to score.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Overrides the model's τ.
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluate against fresh draws from a synthetic task.
    #[arg(long, conflicts_with = "data")]
    pub task: Option<Task>,
    /// Labeled test set.
    #[arg(long, requires = "label_column")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Label of the positive class in --data.
    #[arg(long, default_value_t = 1)]
    pub positive_label: i64,
    /// Task component drawn as positives; all components when absent.
    #[arg(long, requires = "task")]
    pub positive_component: Option<usize>,
    /// Task component drawn as negatives; off-support uniform points when absent.
    #[arg(long, requires = "task")]
    pub negative_component: Option<usize>,
    /// Test points per class and trial.
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Grid nodes per axis for the Hausdorff and d_μ metrics.
    #[arg(long, default_value_t = 61)]
    pub resolution: usize,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// λ grid: comma-separated values or log:<lo>,<hi>,<count>.
    #[arg(long)]
    pub lambdas: String,
    /// Comma-separated τ values.
    #[arg(long, default_value = "0")]
    pub taus: String,
    /// Points to score; the training sample when absent.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub task: Task,
    #[arg(short, long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a reference grid with this many nodes per axis.
    #[arg(long, requires = "grid_out")]
    pub grid: Option<usize>,
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Harness {
    Concentration,
    Bernstein,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Harness::All)]
    pub harness: Harness,
    #[arg(long, default_value = "circle")]
    pub task: Task,
    /// Abel kernel width for the concentration harness.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Size of the sample standing in for the population operator.
    #[arg(long, default_value_t = 20_000)]
    pub reference_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}
