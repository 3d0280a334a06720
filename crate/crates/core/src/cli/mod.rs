//! Command-line front end. Every subcommand writes its outputs plus a
//! `<command>.manifest.json` into `--out-dir`.

mod commands;
mod manifest;
mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{InputFormat, RatingScale, Side};
use crate::error::Error;
use crate::graph::GraphFormat;
use crate::recommend::{Algorithm, GridMode, ModelSettings};
use crate::similarity::HeatmapOrder;
use crate::viz::{Palette, PlotKind};

pub use manifest::{FileDigest, Outputs, RunManifest, MANIFEST_SCHEMA_VERSION};
pub use pipeline::{run_pipeline, PipelineConfig, BUNDLED_MINI_CSV};

/// Environment variable that sizes the worker pool.
pub const THREADS_ENV: &str = "RECSYS_LENS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "recsys-lens",
    version,
    about = "Train, evaluate and visualize matrix-factorization recommenders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a rating file, write it in canonical CSV and report counts.
    Ingest(IngestArgs),
    /// Shuffle ratings into train and test files.
    Split(SplitArgs),
    /// Train one algorithm and report its MAE.
    Train(TrainArgs),
    /// Test MAE over a grid of learning rates or step counts.
    Grid(GridArgs),
    /// Delay-embed an MAE trace into a point cloud.
    Embed(EmbedArgs),
    /// Recurrence plot of an MAE trace.
    Recur(RecurArgs),
    /// Cosine similarity pairs, radii, popularity and heatmap data.
    Sim(SimArgs),
    /// Determinant diversity score of a selection.
    Dpp(DppArgs),
    /// Similarity graph with communities, layout and GraphML/DOT export.
    Graph(GraphArgs),
    /// Render a CSV or bitmap output as SVG.
    Plot(PlotArgs),
    /// Run every stage from one JSON config.
    Pipeline(PipelineArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Grid(_) => "grid",
            Command::Embed(_) => "embed",
            Command::Recur(_) => "recur",
            Command::Sim(_) => "sim",
            Command::Dpp(_) => "dpp",
            Command::Graph(_) => "graph",
            Command::Plot(_) => "plot",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Directory for outputs and the run manifest.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FormatArgs {
    /// Layout of the ratings file.
    #[arg(long, value_enum, default_value = "comoda-csv")]
    pub format: InputFormat,
    /// Lowest valid rating.
    #[arg(long, default_value_t = 1.0)]
    pub scale_min: f64,
    /// Highest valid rating.
    #[arg(long, default_value_t = 5.0)]
    pub scale_max: f64,
}

impl FormatArgs {
    pub fn scale(&self) -> crate::Result<RatingScale> {
        RatingScale::new(self.scale_min, self.scale_max)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Latent dimension.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// SGD learning rate.
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    /// L2 regularization (mf and the hybrid's MF phase).
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// SGD steps (for the hybrid, steps of the MF phase).
    #[arg(long, default_value_t = 50_000)]
    pub iterations: u64,
    /// Dotmat steps before the MF phase of dotmat-hybrid.
    #[arg(long, default_value_t = 20_000)]
    pub iters_pre: u64,
    /// Seed for initialization and sampling.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Neighborhood size for user-cf and item-cf.
    #[arg(long, default_value_t = 20)]
    pub neighbors: usize,
    /// Minimum co-rated count for a similarity pair.
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
}

impl ModelArgs {
    pub fn settings(&self) -> ModelSettings {
        ModelSettings {
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            iterations: self.iterations,
            iters_pre: self.iters_pre,
            seed: self.seed,
            neighbors: self.neighbors,
            min_support: self.min_support,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Ratings file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    /// Ratings file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    /// Fraction of ratings assigned to the training side.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    /// Shuffle seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Algorithm to train.
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    /// Training ratings; optional for zeromat and random.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Held-out ratings for test MAE.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
    /// User count when training without a ratings file.
    #[arg(long, default_value_t = 100)]
    pub users: usize,
    /// Item count when training without a ratings file.
    #[arg(long, default_value_t = 200)]
    pub items: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Record MAE every N steps into a trace CSV (factor models only).
    #[arg(long)]
    pub trace_every: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Algorithm to train.
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    /// Hyperparameter the grid values replace.
    #[arg(long, value_enum, default_value = "rate")]
    pub mode: GridMode,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.002,0.005,0.01,0.02,0.05")]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    /// Trace CSV with an `x,mae` header.
    #[arg(long)]
    pub trace: PathBuf,
    /// Embedding dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Delay between coordinates, in trace samples.
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecurArgs {
    /// Trace CSV with an `x,mae` header.
    #[arg(long)]
    pub trace: PathBuf,
    /// Absolute threshold; overrides --fraction.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Threshold as a fraction of the trace's value range.
    #[arg(long, default_value_t = crate::recurrence::DEFAULT_FRACTION)]
    pub fraction: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Ratings file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    /// Compare users or items.
    #[arg(long, value_enum, default_value = "user")]
    pub side: Side,
    /// Minimum co-rated count for a similarity pair.
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
    #[arg(long, value_enum, default_value = "by-popularity")]
    pub heatmap_order: HeatmapOrder,
    /// Keep only the N most popular entities in the heatmap.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DppArgs {
    /// Similarity pairs CSV (`a,b,sim`).
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum, default_value = "item")]
    pub side: Side,
    /// Comma-separated entity indices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub select: Vec<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Similarity pairs CSV (`a,b,sim`).
    #[arg(long)]
    pub pairs: PathBuf,
    /// Radius CSV (`entity,popularity_rank,radius`) covering every entity.
    #[arg(long)]
    pub radius: PathBuf,
    #[arg(long, value_enum, default_value = "user")]
    pub side: Side,
    /// Keep pairs with similarity strictly above this value.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Seed for Louvain visit order and layout.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Force-directed layout iterations.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    pub repulsion: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gravity: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "graphml,dot")]
    pub formats: Vec<GraphFormat>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Input files: traces or x/y CSVs for line, loglog and scatter2d; a
    /// cloud CSV with --cloud; a heatmap grid CSV; a PBM/PGM bitmap; a
    /// layout CSV for graph.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Series labels, one per input (default: file stem).
    #[arg(long)]
    pub label: Vec<String>,
    /// Header names of the x and y columns (default: first two columns).
    #[arg(long)]
    pub x_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
    /// Treat the scatter2d input as a point-cloud CSV (`x,y` or `x,y,z`).
    #[arg(long)]
    pub cloud: bool,
    /// Similarity pairs CSV providing edges for graph plots.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Drop graph edges at or below this similarity.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value = "")]
    pub title: String,
    #[arg(long, default_value = "")]
    pub x_label: String,
    #[arg(long, default_value = "")]
    pub y_label: String,
    #[arg(long, default_value_t = 720)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    /// Ramp for heatmaps and bitmaps (default: grayscale for recurrence, blues otherwise).
    #[arg(long, value_enum)]
    pub palette: Option<Palette>,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub log_y: bool,
    /// Output file name inside --out-dir (default: `<kind>.svg`).
    #[arg(long)]
    pub output: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// JSON config; omitted keys take their defaults. Without it the bundled
    /// mini dataset is analyzed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Failure of a CLI invocation, tagged with a machine-readable category.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Run(e) => e.category(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => 2,
            "parse" => 3,
            "validate" => 4,
            "compute" => 5,
            _ => 6,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Run(e) => e.to_string(),
        }
    }

    /// `error[<category>]: <message>` on a single line.
    pub fn report(&self) -> String {
        let msg = self.message().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.category(), msg.trim())
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.report());
            return err.exit_code();
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}

fn execute(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    let threads = threads_from_env()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Run(Error::Compute(format!("thread pool: {e}"))))?;
    pool.install(|| commands::dispatch(command, argv, threads))
}
