use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consolidate_core::experiments::{PenaltyMode, PruneCriterion};
use consolidate_core::importance::ImportanceMethod;

const SCHEMAS: &str = "\
Output CSV schemas (header row first, one record per line):
  runs.csv       method,penalty,lambda,seed,status,average_accuracy,per_task_accuracy
                 (per_task_accuracy holds ';'-separated values, empty for failed runs)
  sweep.csv      method,penalty,lambda,mean_accuracy,ci_halfwidth,n_runs,n_failed
  prune.csv      criterion,fraction,mean_accuracy,ci_halfwidth,n_runs
  explosion.csv  step,original,stabilized (empty cell after divergence)

Configuration: every command echoes its effective configuration to
<out>/config.json; passing that file back with --config reproduces the run.
--set KEY=VALUE edits single keys (dotted paths such as adam.lr); values are
parsed as JSON when possible, otherwise taken as strings.";

#[derive(Debug, Parser)]
#[command(name = "consolidate", version, about = "Elastic weight consolidation experiments", after_help = SCHEMAS)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration file for the command.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override one configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,

    /// Base seed for all randomness [default: 0, or the config file's seed].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for independent runs [default: logical cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Dataset root holding mnist/ and fashion-mnist/.
    #[arg(long, global = true, env = "CONSOLIDATE_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download MNIST/FashionMNIST IDX files, or validate files already in place.
    FetchData(FetchArgs),
    /// Train one task sequence with consolidation and report per-task accuracy.
    TrainSeq(TrainArgs),
    /// Grid search over λ with confidence intervals.
    Sweep(SweepArgs),
    /// Pruning-degradation curves per importance criterion.
    Prune(PruneArgs),
    /// Distance-to-anchor trajectory of one weight under both penalty forms.
    DemoExplosion(DemoArgs),
    /// Render SVG plots from CSV results.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetArg {
    /// 784-300-150-10 on permuted MNIST.
    Dense,
    /// Two-conv net on MNIST/FashionMNIST and their rotations.
    Conv,
}

impl NetArg {
    pub fn sequence(self) -> &'static str {
        match self {
            NetArg::Dense => "permuted-mnist-10",
            NetArg::Conv => "rotated-mnist-fashion-4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusArg {
    Mnist,
    FashionMnist,
    All,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Base URL serving train-images-idx3-ubyte.gz and friends for MNIST.
    #[arg(long)]
    pub mnist_mirror: Option<String>,

    /// Base URL for FashionMNIST.
    #[arg(long)]
    pub fashion_mirror: Option<String>,

    /// Only validate files already under the data directory.
    #[arg(long)]
    pub offline: bool,

    #[arg(long, value_enum, default_value = "all")]
    pub corpus: CorpusArg,

    /// Accept sample counts other than 60000/10000.
    #[arg(long)]
    pub any_count: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub net: Option<NetArg>,

    /// fisher (label), fisher-argmax, fisher-sampled, mas, si, tas.
    #[arg(long)]
    pub method: Option<ImportanceMethod>,

    /// none, original or stabilized.
    #[arg(long)]
    pub penalty: Option<PenaltyMode>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,

    #[arg(long)]
    pub lambda: Option<f64>,

    /// Save the consolidated state after every task under <out>/checkpoints.
    #[arg(long)]
    pub save_states: bool,

    /// Also record accuracy on all seen tasks after every task.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Comma-separated λ grid [default: a log grid around the known optimum].
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,

    /// Seeds per grid point.
    #[arg(long)]
    pub runs: Option<usize>,

    /// Use 20 runs per point.
    #[arg(long)]
    pub full_profile: bool,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Comma-separated fractions of weights to zero.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,

    /// Comma-separated criteria: magnitude, fisher, mas, si, total_abs_signal.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<PruneCriterion>>,

    /// Prune the same fraction inside every layer instead of globally.
    #[arg(long)]
    pub per_layer: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory with result CSVs [default: --out].
    #[arg(long)]
    pub input: Option<PathBuf>,
}
