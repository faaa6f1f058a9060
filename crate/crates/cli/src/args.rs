use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "plsforge", version, about = "Penalized two-block PLS: import, fit, predict, simulate")]
pub struct Cli {
    /// Worker threads for parallel chunk reduction.
    #[arg(long, global = true, env = "PLSFORGE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert CSV files into a chunked dataset directory.
    Import(ImportArgs),
    /// Write a chunked dataset back out as CSV.
    Export(ExportArgs),
    /// Fit a model and write its artifacts.
    Fit(Box<FitArgs>),
    /// Predict responses (or classes) for new rows.
    Predict(PredictArgs),
    /// Generate a simulation dataset with its ground truth.
    Simulate(SimulateArgs),
    /// Describe a dataset or model directory as JSON.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    /// Number of chunks.
    #[arg(long = "chunks", value_name = "G", conflicts_with_all = ["chunk_rows", "chunk_bytes"])]
    pub chunks: Option<usize>,
    /// Rows per chunk (default: 10^5 rows or 256 MiB, whichever is smaller).
    #[arg(long = "chunk-rows", value_name = "ROWS", conflicts_with = "chunk_bytes")]
    pub chunk_rows: Option<usize>,
    /// Target bytes of X and Y per chunk.
    #[arg(long = "chunk-bytes", value_name = "BYTES")]
    pub chunk_bytes: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Predictor CSV.
    #[arg(long)]
    pub x: PathBuf,
    /// Response CSV.
    #[arg(long, required_unless_present = "labels", conflicts_with = "labels")]
    pub y: Option<PathBuf>,
    /// One-column class label file; dummy-coded into Y.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// The label file starts with a header line.
    #[arg(long)]
    pub labels_header: bool,
    #[command(flatten)]
    pub chunking: ChunkArgs,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for x.csv and y.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PlsSvd,
    PlsW2a,
    Rcca,
    PlsR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RidgeArg {
    /// `(1-λ)XᵀX + λI`, λ in [0, 1].
    Convex,
    /// `XᵀX + λI`, λ ≥ 0.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Explicit,
    Recursion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    /// Chunked when the estimated in-memory footprint exceeds --memory-limit.
    Auto,
    Memory,
    Chunked,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Chunked dataset directory.
    #[arg(long, conflicts_with_all = ["x", "y", "labels"])]
    pub data: Option<PathBuf>,
    /// Predictor CSV (instead of --data).
    #[arg(long, requires = "response")]
    pub x: Option<PathBuf>,
    #[arg(long, group = "response")]
    pub y: Option<PathBuf>,
    /// Class labels for discriminant analysis (pls-r on the dummy coding).
    #[arg(long, group = "response")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub labels_header: bool,

    #[arg(long, value_enum, default_value = "pls-r")]
    pub mode: ModeArg,
    /// Number of components.
    #[arg(long = "H", visible_alias = "components", default_value_t = 2)]
    pub h: usize,

    /// Penalty on the X-weights: KIND[:LAMBDA[:ALPHA]] with KIND in none, lasso, group, sparse-group.
    #[arg(long, value_name = "SPEC")]
    pub penalty_u: Option<String>,
    #[arg(long, value_name = "SPEC")]
    pub penalty_v: Option<String>,
    #[arg(long)]
    pub lambda_u: Option<f64>,
    #[arg(long)]
    pub lambda_v: Option<f64>,
    /// Sparse-group mixing (1 = lasso, 0 = group).
    #[arg(long)]
    pub alpha_u: Option<f64>,
    #[arg(long)]
    pub alpha_v: Option<f64>,
    /// Group sizes: "5,5,10", "20x20" (20 groups of 20) or a JSON array file.
    #[arg(long, value_name = "SIZES")]
    pub groups_u: Option<String>,
    #[arg(long, value_name = "SIZES")]
    pub groups_v: Option<String>,

    /// rCCA ridge on X.
    #[arg(long, default_value_t = 0.0)]
    pub ridge_x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ridge_y: f64,
    #[arg(long, value_enum, default_value = "convex")]
    pub ridge: RidgeArg,
    /// Scaled NIPALS variant of pls-r.
    #[arg(long)]
    pub scaled_nipals: bool,
    /// SIMPLS variant of pls-r.
    #[arg(long, conflicts_with = "scaled_nipals")]
    pub simpls: bool,

    #[arg(long, overrides_with = "no_center")]
    pub center: bool,
    #[arg(long)]
    pub no_center: bool,
    /// Scale columns to unit variance.
    #[arg(long)]
    pub scale: bool,

    #[arg(long, value_enum, default_value = "explicit")]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub path: PathArg,
    /// Regroup rows into G chunks; implies the chunked path.
    #[arg(long = "chunks", value_name = "G")]
    pub chunks: Option<usize>,
    /// Footprint above which --path auto goes chunked, in bytes.
    #[arg(long, default_value_t = 1 << 30)]
    pub memory_limit: u64,
    /// Reduce chunk products in parallel.
    #[arg(long)]
    pub parallel: bool,

    /// Inner-loop tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Also write the score matrices.
    #[arg(long)]
    pub scores: bool,
    /// Output model directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model directory written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// Predictor CSV.
    #[arg(long)]
    pub x: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Append the predicted class label.
    #[arg(long)]
    pub classify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    GroupPls,
    Plsda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dataset,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub design: Design,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "dataset")]
    pub format: Format,
    #[command(flatten)]
    pub chunking: ChunkArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// Dataset directory.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub data: Option<PathBuf>,
    /// Model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
}
