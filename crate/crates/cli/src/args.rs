use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lumen_rem::evalmap::ModelKind;

/// Indoor visible-light channel simulator and radio-map learner.
#[derive(Debug, Parser, Serialize)]
#[command(name = "lumen-rem", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Simulate a position/RSS dataset and write it as CSV plus a metadata sidecar.
    Generate(GenerateArgs),
    /// Train a model on a dataset CSV and write it as JSON.
    Train(TrainArgs),
    /// Score a model against a reference CSV.
    Evaluate(EvaluateArgs),
    /// Predict RSS for every row of a CSV.
    Predict(PredictArgs),
    /// Build a simulated or predicted radio map on a horizontal plane.
    Map(MapArgs),
    /// Time training and single-point inference.
    Bench(BenchArgs),
    /// Run a JSON-described grid of repeated experiments.
    Campaign(CampaignArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SceneArgs {
    /// Room preset (small, mid, big) or `variable`.
    #[arg(long, default_value = "mid")]
    pub scene: String,
    /// Number of LEDs (1 or 4).
    #[arg(long, default_value_t = 1)]
    pub leds: usize,
    /// Room length for `--scene variable`, meters.
    #[arg(long)]
    pub lx: Option<f64>,
    /// Room width for `--scene variable`, meters.
    #[arg(long)]
    pub ly: Option<f64>,
    /// Wall reflectance override.
    #[arg(long)]
    pub reflectance: Option<f64>,
    /// Wall patch edge for the reflected-path quadrature, meters.
    #[arg(long, default_value_t = 0.2)]
    pub patch_edge: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Grid points per axis for fixed rooms.
    #[arg(long, default_value_t = 50)]
    pub per_axis: usize,
    /// Grid points per horizontal axis for variable rooms.
    #[arg(long, default_value_t = 20)]
    pub per_xy: usize,
    /// Grid points in height for variable rooms.
    #[arg(long, default_value_t = 10)]
    pub per_z: usize,
    /// Sampled room lengths (and widths) for variable rooms.
    #[arg(long, default_value_t = 10)]
    pub per_dim: usize,
    /// Draw this many uniform reference points instead of a grid.
    #[arg(long)]
    pub reference: Option<usize>,
    /// Gaussian noise as a multiple of the std of the clean powers.
    #[arg(long, default_value_t = 0.0)]
    pub noise_factor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TreeArgs {
    /// Trees in an Extra Trees ensemble.
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// AdaBoost rounds.
    #[arg(long, default_value_t = 50)]
    pub n_estimators: usize,
    /// Trees per boosted Extra Trees learner.
    #[arg(long, default_value_t = 10)]
    pub base_trees: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainKnobs {
    /// Rows drawn from the data before the 60/20/20 split.
    #[arg(long, default_value_t = 12_500)]
    pub train_size: usize,
    #[arg(long, default_value_t = 250)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub trees: TreeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// mlp32x128, mlp64x256, dt, xt or adaboost.
    #[arg(long, default_value = "mlp32x128")]
    pub model: ModelKind,
    /// Training data CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub knobs: TrainKnobs,
    /// Output model JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Reference CSV with true RSS values.
    #[arg(long)]
    pub reference: PathBuf,
    /// Output report JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with x, y, z (and lx, ly for variable-room models).
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MapArgs {
    /// Model JSON file; omit with `--simulate`.
    #[arg(long, conflicts_with = "simulate", required_unless_present = "simulate")]
    pub model: Option<PathBuf>,
    /// Use the channel simulator instead of a model.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Height of the map plane, meters.
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
    /// Cell size, meters.
    #[arg(long, default_value_t = 0.05)]
    pub spacing: f64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a plain PGM image.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Also write the center-to-corner profile as CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub profile_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// mlp32x128, mlp64x256, dt, xt or adaboost.
    #[arg(long, default_value = "mlp32x128")]
    pub model_kind: ModelKind,
    /// Training data CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[command(flatten)]
    pub knobs: TrainKnobs,
    /// Output report JSON path (printed to stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CampaignArgs {
    /// Campaign JSON spec.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
