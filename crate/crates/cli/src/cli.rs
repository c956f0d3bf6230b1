//! Command-line surface: subcommands and flags. Flags mirror the JSON
//! config-file keys one-to-one; a flag always overrides the file value.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::KnobFlags;

#[derive(Debug, Parser)]
#[command(
    name = "clozekit",
    version,
    about = "Generate multiple-choice visual reasoning datasets of controllable \
             difficulty from procedural corpora, and measure their residual \
             distance bias"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate dataset JSONL files plus a run manifest.
    Generate(GenerateArgs),
    /// Print corpus (and optional dataset) statistics as JSON.
    Stats(StatsArgs),
    /// Train the distance probe on a dataset; optionally compare a baseline.
    Probe(ProbeArgs),
    /// Score a dataset with a heuristic solver.
    Solve(SolveArgs),
    /// Run all 8 knob tuples per task and write one report file per task.
    Sweep(SweepArgs),
    /// Write a deterministic synthetic corpus + embeddings fixture.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Recipe corpus (JSONL).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Image-embedding store (binary).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory (or config key out_dir, or $CLOZEKIT_OUT_DIR).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// cloze | coherence | ordering | all.
    #[arg(long)]
    pub task: Option<String>,
    /// Far-negative contrast mode (no budget/radial/proximity knobs).
    #[arg(long)]
    pub legacy: bool,
    /// Write {task}.train.jsonl/{task}.valid.jsonl split by recipe hash.
    #[arg(long)]
    pub valid_fraction: Option<f64>,
    #[command(flatten)]
    pub knobs: KnobFlags,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Recipe corpus (JSONL).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Newline-delimited vocabulary for the in-vocabulary token ratio.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    /// Dataset files to summarize (repeatable).
    #[arg(long)]
    pub dataset: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset to probe.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Image-embedding store (binary).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Second dataset to compare against (prints both accuracies + gap).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Gradient-descent step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// L2 penalty on probe weights.
    #[arg(long)]
    pub l2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset to score.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Image-embedding store (binary).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// nearest_cloze | oddone_coherence | minpath_ordering
    /// (default: the dataset task's canonical solver).
    #[arg(long)]
    pub solver: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Recipe corpus (JSONL).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Image-embedding store (binary).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory (or config key out_dir, or $CLOZEKIT_OUT_DIR).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// cloze | coherence | ordering | all.
    #[arg(long)]
    pub task: Option<String>,
    #[command(flatten)]
    pub knobs: KnobFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (or config key out_dir, or $CLOZEKIT_OUT_DIR).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Number of synthetic recipes.
    #[arg(long)]
    pub n_recipes: Option<usize>,
    /// Minimum steps per recipe.
    #[arg(long)]
    pub steps_lo: Option<usize>,
    /// Maximum steps per recipe.
    #[arg(long)]
    pub steps_hi: Option<usize>,
    /// Embedding dimensionality.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Std-dev of recipe centroids around the origin.
    #[arg(long)]
    pub recipe_spread: Option<f64>,
    /// Std-dev of image noise around its step's position.
    #[arg(long)]
    pub within_spread: Option<f64>,
    /// Per-step drift distance along the recipe's direction.
    #[arg(long)]
    pub drift: Option<f64>,
    /// Fixture seed.
    #[arg(long)]
    pub seed: Option<u64>,
}
