use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Training-free temporal grounding over precomputed similarity tracks.
#[derive(Debug, Parser)]
#[command(name = "vtg", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a query into sub-events and write the plan.
    Plan(PlanArgs),
    /// Score proposals for every sub-event of a plan.
    Localize(LocalizeArgs),
    /// Combine per-sub-event proposals into one prediction.
    Fuse(FuseArgs),
    /// Plan, localize and fuse every annotation in a file.
    Pipeline(PipelineArgs),
    /// Recall at IoU thresholds and mean IoU.
    Evaluate(EvaluateArgs),
    /// Prepend irrelevant frames to tracks and shift the ground truth.
    OodShift(OodShiftArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML config; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Minimum per-frame rise counted as dynamic.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Gaussian smoothing width in frames; 0 disables smoothing.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub topk: Option<usize>,
    /// Suppress proposals overlapping a kept one by more than this IoU.
    #[arg(long)]
    pub nms_iou: Option<f64>,
    #[arg(long)]
    pub min_frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlannerArgs {
    /// Skip the language model; every query becomes a single event.
    #[arg(long)]
    pub no_llm: bool,
    /// Chat-completions endpoint.
    #[arg(long, value_name = "URL")]
    pub endpoint_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long, value_name = "SECONDS")]
    pub timeout_sec: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub query: String,
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Plan file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    /// One track per sub-event, in plan order.
    #[arg(long = "track", value_name = "FILE", conflicts_with = "tracks_dir")]
    pub tracks: Vec<PathBuf>,
    /// Track store directory, used with --video-id.
    #[arg(long, value_name = "DIR", requires = "video_id")]
    pub tracks_dir: Option<PathBuf>,
    #[arg(long)]
    pub video_id: Option<String>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Proposals file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub proposals: PathBuf,
    /// Prediction file (one JSON line); stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Annotations, one JSON record per line.
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Track store directory.
    #[arg(long, value_name = "DIR")]
    pub tracks: Option<PathBuf>,
    /// Predictions, one JSON record per line.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Comma-separated IoU thresholds.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Report as JSON.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OodShiftArgs {
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Track store directory to read.
    #[arg(long, value_name = "DIR")]
    pub tracks: PathBuf,
    #[arg(long, value_name = "SECONDS")]
    pub prefix_sec: f64,
    #[arg(long)]
    pub seed: u64,
    /// Lower bound of the inserted similarity values.
    #[arg(long, default_value_t = -0.05, allow_negative_numbers = true)]
    pub low: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub high: f64,
    #[arg(long, value_name = "FILE")]
    pub out_annotations: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out_tracks: PathBuf,
}
