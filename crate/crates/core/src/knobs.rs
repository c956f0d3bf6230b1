//! Generation configuration: the three difficulty knobs plus counts and seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full generation configuration. Together with a corpus and an embedding
/// store this determines every generated dataset byte.
///
/// * `k1` — question-budget knob: 0 caps questions per recipe at
///   `floor(steps/2)`, 1 at `floor(steps/3)` and additionally retires one
///   extra pool step per question.
/// * `k2` — negative-hardness knob: 0 samples negatives from the inner ball
///   `[0, m_d − s_d)` of the correct choice's neighbor ring, 1 from the
///   annulus `[m_d − s_d, m_d + s_d)`.
/// * `k3` — proximity knob: with probability `k3_prob` per question, one
///   negative is replaced by an in-band image strictly closer to the
///   question representative than the correct choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobConfig {
    pub k1: u8,
    pub k2: u8,
    pub k3: u8,
    /// Question slots per item (4 everywhere in practice).
    pub n_q: usize,
    /// Answer choices per item.
    pub n_a: usize,
    /// Neighbor-ring size for radial statistics.
    pub k_c: usize,
    /// Per-question probability that the proximity knob acts (given k3=1).
    pub k3_prob: f64,
    /// Minimum recipe length; shorter recipes are skipped.
    pub min_steps: usize,
    pub seed: u64,
}

impl Default for KnobConfig {
    fn default() -> Self {
        KnobConfig {
            k1: 0,
            k2: 0,
            k3: 0,
            n_q: 4,
            n_a: 4,
            k_c: 100,
            k3_prob: 0.5,
            min_steps: 5,
            seed: 7,
        }
    }
}

impl KnobConfig {
    /// Convenience constructor: default config with the given knob tuple.
    pub fn with_knobs(k1: u8, k2: u8, k3: u8) -> Self {
        KnobConfig { k1, k2, k3, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 > 1 || self.k2 > 1 || self.k3 > 1 {
            return Err(Error::InvalidConfig("knob values must be 0 or 1".into()));
        }
        if self.n_q < 2 {
            return Err(Error::InvalidConfig("n_q must be at least 2".into()));
        }
        if self.n_a < 2 {
            return Err(Error::InvalidConfig("n_a must be at least 2".into()));
        }
        if self.k_c < 2 {
            return Err(Error::InvalidConfig("k_c must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.k3_prob) {
            return Err(Error::InvalidConfig("k3_prob must lie in [0, 1]".into()));
        }
        if self.min_steps < 1 {
            return Err(Error::InvalidConfig("min_steps must be positive".into()));
        }
        Ok(())
    }

    /// Per-recipe question cap for a recipe with `n_steps` steps.
    pub fn question_cap(&self, n_steps: usize) -> usize {
        if self.k1 == 0 {
            n_steps / 2
        } else {
            n_steps / 3
        }
    }

    /// The 8 knob tuples in canonical order (0,0,0) … (1,1,1).
    pub fn all_tuples() -> [(u8, u8, u8); 8] {
        [
            (0, 0, 0),
            (0, 0, 1),
            (0, 1, 0),
            (0, 1, 1),
            (1, 0, 0),
            (1, 0, 1),
            (1, 1, 0),
            (1, 1, 1),
        ]
    }
}
