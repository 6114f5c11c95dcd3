mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Content-based recommenders with factored user priors.
#[derive(Debug, Parser)]
#[command(name = "dfpm", version)]
struct Cli {
    /// TOML file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log detail on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the vocabulary and per-user labelled datasets from raw text.
    Ingest(IngestArgs),
    /// Train one model, or tune over a grid on validation macro-F1.
    Train(TrainArgs),
    /// Score a model on one split and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Report top terms per factor and, for clustered models, cluster contents.
    Inspect(InspectArgs),
    /// Sample a synthetic dataset with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSON-lines documents: {"id": ..., "text": ...}.
    #[arg(long)]
    pub documents: Option<PathBuf>,
    /// Tab-separated user_id, item_id pairs.
    #[arg(long)]
    pub interactions: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Minimum document frequency of a kept term [default: 50].
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_ratio: Option<f64>,
    #[arg(long)]
    pub validation_ratio: Option<f64>,
    #[arg(long)]
    pub test_ratio: Option<f64>,
    /// Append a constant feature to every item vector.
    #[arg(long)]
    pub bias: bool,
    #[arg(long)]
    pub no_stem: bool,
    #[arg(long)]
    pub keep_stop_words: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Datasets file written by `ingest` or `synth`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// l2lr, bhlr, dfpm-norm or dfpm-mult [default: dfpm-mult].
    #[arg(long)]
    pub variant: Option<String>,
    /// Number of hidden factors H [default: 5].
    #[arg(long)]
    pub h_factors: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub c3: Option<f64>,
    /// [default: 20]
    #[arg(long)]
    pub max_outer_iters: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub max_inner_iters: Option<usize>,
    /// Relative objective change that ends training [default: 1e-4].
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threads for the per-user step [default: 1].
    #[arg(long)]
    pub workers: Option<usize>,
    /// gaussian, l2lr-profiles or l2lr-spread [default: gaussian].
    #[arg(long)]
    pub init: Option<String>,
    /// Standard deviation of the Gaussian factor start [default: 0.01].
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Comma-separated H values to tune over.
    #[arg(long, value_delimiter = ',')]
    pub grid_h: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_c1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_c2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_c3: Option<Vec<f64>>,
    /// Where to write the per-grid-point validation scores.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Second model; adds a paired t-test on per-user F1.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// train, validation or test.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary file for term names (features are shown as f<i> without it).
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    /// Datasets file; needed for the items-per-cluster listing.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Terms per factor [default: 20].
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Items per cluster [default: 10].
    #[arg(long)]
    pub top_items: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Number of users M [default: 60].
    #[arg(long)]
    pub users: Option<usize>,
    /// Number of features K [default: 100].
    #[arg(long)]
    pub features: Option<usize>,
    /// True number of factors [default: 3].
    #[arg(long)]
    pub h_true: Option<usize>,
    /// Training examples per user J [default: 40].
    #[arg(long)]
    pub examples_per_user: Option<usize>,
    /// Validation and test examples per user [default: 40].
    #[arg(long)]
    pub held_out: Option<usize>,
    #[arg(long)]
    pub factor_scale: Option<f64>,
    #[arg(long)]
    pub lambda_scale: Option<f64>,
    #[arg(long)]
    pub profile_noise: Option<f64>,
    #[arg(long)]
    pub feature_density: Option<f64>,
    /// mult or norm [default: mult].
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(dfpm::Error),
}

impl From<dfpm::Error> for CliError {
    fn from(e: dfpm::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(dfpm::Error::InvalidArgument(_) | dfpm::Error::Unsupported(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a, &cfg),
        Command::Train(a) => commands::train(&a, &cfg),
        Command::Evaluate(a) => commands::evaluate(&a, &cfg),
        Command::Inspect(a) => commands::inspect(&a, &cfg),
        Command::Synth(a) => commands::synth(&a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
