mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "fca2vec",
    version,
    about = "Formal concept analysis and closure-system embeddings"
)]
struct Cli {
    /// JSON file with option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FCA2VEC_THREADS")]
    threads: Option<usize>,

    /// Drop empty objects/attributes instead of rejecting the context.
    #[arg(long, global = true)]
    drop_empty: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size, density and optionally lattice statistics of a context.
    Info(InfoArgs),
    /// Concepts in lectic order: `index, extent-hex, intent-hex`.
    Concepts(ExportArgs),
    /// Cover edges `lower, upper` of the concept lattice.
    Covers(ExportArgs),
    /// Canonical implication base, one `premise -> conclusion` per line.
    Base(ExportArgs),
    /// Nominal scaling of a CSV table into a Burmeister context.
    Scale(ScaleArgs),
    /// Train a siamese closure2vec model.
    #[command(name = "train-closure2vec")]
    TrainClosure2vec(Closure2VecArgs),
    /// Train object embeddings from concept extents.
    #[command(name = "train-o2v")]
    TrainO2v(Fc2VecArgs),
    /// Train attribute embeddings from concept intents.
    #[command(name = "train-a2v")]
    TrainA2v(Fc2VecArgs),
    /// Temporal link prediction with edge features from node embeddings.
    #[command(name = "eval-linkpred")]
    EvalLinkpred(LinkPredArgs),
    /// Attribute clustering scored by intra-cluster implications.
    #[command(name = "eval-cluster")]
    EvalCluster(ClusterArgs),
    /// Embedded distances of covering versus non-covering concept pairs.
    #[command(name = "eval-covers")]
    EvalCovers(DistanceArgs),
    /// Embedded distances between implication premises and conclusions.
    #[command(name = "eval-implications")]
    EvalImplications(DistanceArgs),
    /// Export 2d/3d embeddings with labels as CSV.
    Scatter(ScatterArgs),
    /// Build the integer closure net and check it reproduces `B ↦ B″`.
    #[command(name = "verify-rudolph")]
    VerifyRudolph(VerifyArgs),
    /// Smallest squared error of an affine map onto the closure (|M| ≤ 12).
    #[command(name = "affine-residual")]
    AffineResidual(InputArgs),
    /// Fit a linear net to `B ↦ B′` on small sets and test on larger ones.
    #[command(name = "diag-linear")]
    DiagLinear(DiagArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchArg {
    Sg,
    Cbow,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceArg {
    Euclidean,
    Cosine,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    Plain,
    Squared,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Word2vec,
    Glorot,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    O2vSg,
    O2vCbow,
    Random,
    External,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct InputArgs {
    /// Burmeister (.cxt) context.
    pub input: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct InfoArgs {
    pub input: Option<PathBuf>,
    /// Also enumerate concepts and the canonical base.
    #[arg(long)]
    pub full: bool,
    /// JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ExportArgs {
    pub input: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ScaleArgs {
    /// CSV table with a header row.
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Scale `?` as an ordinary value instead of leaving the cell empty.
    #[arg(long)]
    pub missing_as_value: bool,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Closure2VecArgs {
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(short, long)]
    pub d: Option<usize>,
    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr0: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Largest attribute set used in training pairs.
    #[arg(long)]
    pub max_set_size: Option<usize>,
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Fc2VecArgs {
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub arch: Option<ArchArg>,
    #[arg(short, long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr0: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct LinkPredArgs {
    /// Paper/author context; attributes are papers.
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// `attribute<TAB>year` sidecar (default: `<input stem>.years.tsv`).
    #[arg(long)]
    pub years: Option<PathBuf>,
    /// Last year of the training graph.
    #[arg(long)]
    pub train_cutoff: Option<i32>,
    #[arg(long)]
    pub test_start: Option<i32>,
    #[arg(long)]
    pub test_end: Option<i32>,
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    /// Embedding TSV for `--source external`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(short, long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr0: Option<f64>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ClusterArgs {
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(short, long)]
    pub d: Option<usize>,
    /// Cluster counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub archs: Option<Vec<ArchArg>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub random_rounds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr0: Option<f64>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DistanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub train: Closure2VecArgs,
    /// Evaluate a saved model instead of training one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Most non-cover pairs evaluated before sampling kicks in.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ScatterArgs {
    /// Embedding TSV with 2 or 3 coordinates.
    pub input: Option<PathBuf>,
    /// `name<TAB>label` lines; unlisted names get an empty label.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    pub input: Option<PathBuf>,
    /// Random sets checked when |M| is too large for exhaustive checking.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DiagArgs {
    pub input: Option<PathBuf>,
    /// Training sets have at most this many attributes.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Outcome of a subcommand that ran to completion.
pub enum Status {
    Ok,
    /// Finished, but the input was degenerate.
    Warnings,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Warnings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
