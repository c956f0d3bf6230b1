//! Generation engine and diagnostics toolkit for multiple-choice visual
//! reasoning datasets built from procedural recipes.
//!
//! A recipe corpus (steps with tokens and image ids) plus an image-embedding
//! store are turned into three tasks — fill the missing step image
//! ("cloze"), spot the inserted outsider image ("coherence"), and recover
//! the step order ("ordering") — with three difficulty knobs:
//!
//! * knob 1 trims the per-recipe question budget and retires used steps, so
//!   questions within a recipe overlap less;
//! * knob 2 places wrong choices inside a distance band around the correct
//!   choice's neighborhood, so raw distance stops identifying the answer;
//! * knob 3 occasionally plants a wrong choice *closer* to the question
//!   than the correct one, breaking nearest-neighbor shortcuts outright.
//!
//! The [`diagnostics`] module quantifies how much any generated dataset
//! still leaks its labels through choice geometry (heuristic solvers, a
//! linear probe, distance-separation and overlap statistics), and
//! [`synth`] builds a deterministic clustered fixture so everything can be
//! exercised without external data.

pub mod corpus;
pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod generate;
pub mod io;
pub mod knobs;
pub mod plan;
pub mod question;
pub mod rng;
pub mod synth;

pub use corpus::{
    corpus_stats, filter_by_min_steps, load_corpus, load_vocabulary, parse_corpus,
    write_vocabulary, Corpus, CorpusStats, Recipe, Step,
};
pub use embedding::{
    distance, ring_stats, ring_stats_from_distances, Annulus, EmbeddingStore, KnnResult,
    RingStats,
};
pub use error::{Error, Result};
pub use generate::{
    generate_cloze, generate_coherence, generate_legacy_cloze, generate_ordering,
    sequence_score,
};
pub use knobs::KnobConfig;
pub use question::{
    recipe_in_valid_split, split_dataset, Dataset, Manifest, Provenance, QuestionBody,
    QuestionRecord, SourceDigests, Task,
};
pub use rng::StreamKey;
pub use synth::{generate_synthetic, SynthParams};
