use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "lgs",
    version,
    about = "Local gradients smoothing and baseline defenses against localized patch noise"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run config; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "LGS_WORKERS")]
    pub workers: Option<usize>,
    /// Output formats: png or pnm for images, json or csv for reports.
    #[arg(long, global = true, value_delimiter = ',')]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Apply a defense to each input image.
    Defend(DefendArgs),
    /// Paste a simulated patch into each input and write the ground-truth mask.
    Simulate(SimulateArgs),
    /// Patch, defend and measure every (image, patch, defense) combination.
    Evaluate(EvaluateArgs),
    /// Run the jobs listed in a TOML file.
    Batch(BatchArgs),
    /// Dump the LGS intermediate maps and statistics for each input.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Png,
    Pnm,
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IoArgs {
    /// Input files or glob patterns.
    pub inputs: Vec<String>,
    /// Output directory.
    #[arg(short, long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

/// Defense selection and parameter overrides. Each parameter applies only
/// to the defenses that take it.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenseArgs {
    /// lgs, median (mf), gaussian (gf), bilateral (bf), bit_depth (br), jpeg, tvm.
    #[arg(long)]
    pub defense: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long)]
    pub overlap: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sigma_range: Option<f64>,
    #[arg(long)]
    pub quality: Option<u8>,
    #[arg(long)]
    pub depth: Option<u8>,
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementKind {
    Border,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Uniform,
    Checker,
    Solid,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchArgs {
    /// Preset: lavan42, lavan52, lavan60, patch95. Evaluate accepts a list.
    #[arg(long, value_delimiter = ',')]
    pub patch: Vec<String>,
    /// Patch side in pixels, instead of a preset.
    #[arg(long)]
    pub size: Option<usize>,
    /// Seed for noise and border placement.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub placement: Option<PlacementKind>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub left: Option<usize>,
    /// Border band width for border placement.
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    /// Checkerboard square side.
    #[arg(long)]
    pub period: Option<usize>,
    /// Solid fill value.
    #[arg(long)]
    pub value: Option<f64>,
}

/// Parameter sweeps for evaluate.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridArgs {
    /// Defense kinds to evaluate.
    #[arg(long, value_delimiter = ',')]
    pub defenses: Vec<String>,
    /// LGS smoothing factors.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    /// JPEG qualities.
    #[arg(long, value_delimiter = ',')]
    pub qualities: Vec<u8>,
    /// TVM weights.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
    /// Bit depths.
    #[arg(long, value_delimiter = ',')]
    pub depths: Vec<u8>,
    /// Median, Gaussian and bilateral windows.
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DefendArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub defense: DefenseArgs,
    /// Also write the normalized and filtered gradient maps and the mask.
    #[arg(long)]
    pub dump_intermediates: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub patch: PatchArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub defense: DefenseArgs,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    /// TOML file with a `[[job]]` table per run.
    pub jobs: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub defense: DefenseArgs,
}
