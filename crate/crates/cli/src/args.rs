use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success; the requested output was fully written
  1  internal error
  2  invalid arguments or parameters (checked before any file is read)
  3  I/O error (missing file, unwritable output)
  4  malformed input file (bad magic, truncation, version, corruption)
  5  index does not match the dataset (content hash, dimension, scalar width)
  6  data outside the metric's domain (negative chi-square input, zero vector)";

#[derive(Debug, Parser, Serialize)]
#[command(name = "rpf", version, about = "Approximate nearest-neighbor search with random binary partition forests", after_help = EXIT_CODES)]
pub struct Cli {
    /// Worker threads for tree builds and query batches (0 = all cores).
    /// Results do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Build a forest over a dataset and save it as an index file.
    Build(BuildArgs),
    /// Answer k-NN queries with a saved index; writes a results CSV.
    Query(QueryArgs),
    /// Compute exact neighbors by linear scan; writes a ground-truth file.
    Oracle(OracleArgs),
    /// Measure recall@1 and candidate fraction for one tree count.
    Eval(EvalArgs),
    /// Like eval, for an ascending list of tree counts.
    Sweep(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// MNIST idx (u8 pixels, scaled by 1/255)
    Idx,
    /// rpforest raw f32 file
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Euclidean,
    ChiSquare,
}

impl From<MetricArg> for rpforest::Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => rpforest::Metric::Euclidean,
            MetricArg::ChiSquare => rpforest::Metric::ChiSquare,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Database file (idx images or raw).
    #[arg(long)]
    pub data: PathBuf,

    /// Optional idx label file for --data.
    #[arg(long)]
    pub labels: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Idx)]
    pub format: Format,

    /// Scale every vector (database and queries) to unit Euclidean norm.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ForestArgs {
    /// Split ratio r in (0, 0.5]: each child keeps at least this fraction
    /// of a splitting leaf's points.
    #[arg(long, default_value_t = 0.3)]
    pub split_ratio: f64,

    /// Leaf capacity C (>= 2): a leaf splits when it exceeds this many points.
    #[arg(long, default_value_t = 12)]
    pub capacity: usize,

    /// Projection size K: coordinates combined per split (1 = axis-parallel).
    #[arg(long, default_value_t = 1)]
    pub proj_dims: usize,

    /// Seed for every random decision.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Number of trees L.
    #[arg(long)]
    pub trees: usize,

    #[command(flatten)]
    pub forest: ForestArgs,

    /// Index file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QueryArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Index built over --data.
    #[arg(long)]
    pub index: PathBuf,

    /// Query file, same format and normalization as --data.
    #[arg(long)]
    pub queries: PathBuf,

    #[arg(long, default_value_t = 1)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,

    /// Also time an exhaustive scan of every query for comparison.
    #[arg(long)]
    pub compare_exact: bool,

    /// Results CSV: query_index,rank,id,distance,candidates_examined
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub queries: PathBuf,

    #[arg(long, default_value_t = 1)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,

    /// Ground-truth file to write.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the table as CSV (query_index,rank,id,distance).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub queries: PathBuf,

    /// Tree count L (eval) or comma-separated ascending list (sweep).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub trees: Vec<usize>,

    #[command(flatten)]
    pub forest: ForestArgs,

    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,

    /// Independent random trials per configuration.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,

    /// Ground-truth cache (as written by `oracle --k 1`); created if absent
    /// or stale.
    #[arg(long)]
    pub truth_cache: Option<PathBuf>,

    /// Leave the timing columns empty so the CSV depends only on the inputs.
    #[arg(long)]
    pub no_timings: bool,

    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
}
