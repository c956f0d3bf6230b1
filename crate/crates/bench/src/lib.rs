//! Shared fixtures for the criterion benchmarks (no library code of its
//! own; see the `benches/` directory).

use clozekit::{generate_synthetic, Corpus, EmbeddingStore, SynthParams};

/// Deterministic mid-size fixture used by all benchmarks.
pub fn bench_fixture(n_recipes: usize, dim: usize) -> (Corpus, EmbeddingStore) {
    let params = SynthParams { n_recipes, dim, seed: 17, ..SynthParams::default() };
    generate_synthetic(&params).expect("valid fixture parameters")
}
