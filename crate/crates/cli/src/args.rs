use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "aiou", version, about = "Attention-IoU bias analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score attention maps against per-image feature masks.
    ScoreMask(ScoreMaskArgs),
    /// Score attention maps of attributes against the protected attribute's maps.
    ScoreHeatmap(ScoreHeatmapArgs),
    /// Plan subgroup sizes realizing a sweep of target MCC values.
    Plan(PlanArgs),
    /// Generate a synthetic attention-leakage fixture.
    Synth(SynthArgs),
    /// Check containers and labels for consistency.
    Validate(ValidateArgs),
    /// Aggregate per-model score reports into mean and std across models.
    Merge(MergeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Grouping {
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Prediction scores (same layout as the labels file).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Protected attribute used to split results into groups.
    #[arg(long)]
    pub protected: Option<String>,
    /// Groups smaller than this fraction of all images are excluded.
    #[arg(long, default_value_t = aiou_core::DEFAULT_EXCLUSION_THRESHOLD)]
    pub threshold: f64,
    /// Form groups from predicted rather than ground-truth labels.
    #[arg(long)]
    pub use_predictions: bool,
}

#[derive(Debug, Args)]
pub struct ScoreMaskArgs {
    /// Attention map container.
    #[arg(long)]
    pub maps: PathBuf,
    /// Mask container.
    #[arg(long)]
    pub masks: PathBuf,
    /// Attribute whose attention maps are scored.
    #[arg(long)]
    pub target: String,
    /// Mask feature to score against.
    #[arg(long)]
    pub reference: String,
    #[command(flatten)]
    pub grouping: Grouping,
    /// Also write the averaged attention map as CSV.
    #[arg(long)]
    pub average_map: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScoreHeatmapArgs {
    #[arg(long)]
    pub maps: PathBuf,
    /// Comma-separated attributes to compare with the protected attribute.
    #[arg(long, value_delimiter = ',', required = true)]
    pub target: Vec<String>,
    #[command(flatten)]
    pub grouping: Grouping,
    /// Reference count for normalized AP; defaults to the mean positive
    /// count over the requested attributes.
    #[arg(long)]
    pub n_ref: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub protected: String,
    /// Comma-separated target MCC values, in sweep order.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub targets: Vec<f64>,
    /// Write one label CSV per plan into this directory.
    #[arg(long)]
    pub subsets: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving attention.aiou, masks.aiou and labels.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub images: usize,
    /// Attention map side length.
    #[arg(long, default_value_t = 14)]
    pub size: usize,
    /// Mask resolution as a multiple of the map size.
    #[arg(long, default_value_t = 4)]
    pub mask_scale: usize,
    /// Fraction of attention placed on the background.
    #[arg(long)]
    pub leakage: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub maps: Option<PathBuf>,
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// JSON reports written by score-mask or score-heatmap.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}
