//! Run configuration: an optional JSON config file whose keys mirror the
//! command-line flags one-to-one, with flags taking precedence. The default
//! output directory can also come from the `CLOZEKIT_OUT_DIR` environment
//! variable.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use clozekit::{Error, KnobConfig, Result};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "CLOZEKIT_OUT_DIR";

/// All recognized config-file keys. Every field is optional; a flag with the
/// same name overrides the file value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub task: Option<String>,
    pub k1: Option<u8>,
    pub k2: Option<u8>,
    pub k3: Option<u8>,
    pub n_q: Option<usize>,
    pub n_a: Option<usize>,
    pub k_c: Option<usize>,
    pub k3_prob: Option<f64>,
    pub min_steps: Option<usize>,
    pub seed: Option<u64>,
    pub legacy: Option<bool>,
    pub valid_fraction: Option<f64>,
    pub solver: Option<String>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        require_file(path, "config")?;
        let bytes = std::fs::read(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_slice(&bytes).map_err(|e| {
            Error::InvalidConfig(format!("config file {}: {e}", path.display()))
        })
    }
}

/// Validation error (exit 1) when a required input path is absent or not a
/// file; the message names the path.
pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{what} file not found: {}",
            path.display()
        )))
    }
}

/// First Some wins: flag, then config file.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Required-path resolution: flag, then config file; an error names the
/// missing key.
pub fn need(value: Option<PathBuf>, key: &str) -> Result<PathBuf> {
    value.ok_or_else(|| {
        Error::InvalidConfig(format!("missing required option --{key} (or config key {key:?})"))
    })
}

/// Output directory: flag, config file, then `CLOZEKIT_OUT_DIR`.
pub fn resolve_out_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<PathBuf> {
    pick(flag, file)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "missing output directory: pass --out-dir, set config key \"out_dir\", \
                 or set {OUT_DIR_ENV}"
            ))
        })
}

/// Knob-related flags shared by `generate` and `sweep`.
#[derive(Debug, Clone, Copy, Default, clap::Args)]
pub struct KnobFlags {
    /// Question-budget knob (0 or 1).
    #[arg(long)]
    pub k1: Option<u8>,
    /// Radial-band knob (0 = inner ball, 1 = annulus).
    #[arg(long)]
    pub k2: Option<u8>,
    /// Proximity-plant knob (0 or 1).
    #[arg(long)]
    pub k3: Option<u8>,
    /// Question slots per item.
    #[arg(long)]
    pub n_q: Option<usize>,
    /// Answer choices per item.
    #[arg(long)]
    pub n_a: Option<usize>,
    /// Neighbor-ring size for radial statistics.
    #[arg(long)]
    pub k_c: Option<usize>,
    /// Probability that the proximity knob acts on a question (given k3=1).
    #[arg(long)]
    pub k3_prob: Option<f64>,
    /// Minimum steps a recipe needs to produce questions.
    #[arg(long)]
    pub min_steps: Option<usize>,
    /// Generation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl KnobFlags {
    /// Merge flags over config-file values over `KnobConfig::default()`.
    pub fn resolve(&self, file: &FileConfig) -> Result<KnobConfig> {
        let d = KnobConfig::default();
        let cfg = KnobConfig {
            k1: pick(self.k1, file.k1).unwrap_or(d.k1),
            k2: pick(self.k2, file.k2).unwrap_or(d.k2),
            k3: pick(self.k3, file.k3).unwrap_or(d.k3),
            n_q: pick(self.n_q, file.n_q).unwrap_or(d.n_q),
            n_a: pick(self.n_a, file.n_a).unwrap_or(d.n_a),
            k_c: pick(self.k_c, file.k_c).unwrap_or(d.k_c),
            k3_prob: pick(self.k3_prob, file.k3_prob).unwrap_or(d.k3_prob),
            min_steps: pick(self.min_steps, file.min_steps).unwrap_or(d.min_steps),
            seed: pick(self.seed, file.seed).unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
