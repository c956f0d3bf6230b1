//! The 8-row knob sweep: generate every knob tuple with shared seed
//! discipline and score each dataset with the task's heuristic solver, the
//! linear probe, the distance effect size, and question overlap.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::diagnostics::features::extract_distance_features;
use crate::diagnostics::overlap::overlap_stats;
use crate::diagnostics::probe::{
    probe_accuracy, train_probe, DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_LR,
};
use crate::diagnostics::separation::gap_and_effect_size;
use crate::diagnostics::solvers::{evaluate_solver, Solver};
use crate::embedding::EmbeddingStore;
use crate::error::Result;
use crate::generate::{generate_cloze, generate_coherence, generate_ordering};
use crate::knobs::KnobConfig;
use crate::question::{Dataset, SourceDigests, Task};

/// One sweep row: a knob tuple and its dataset's bias metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k1: u8,
    pub k2: u8,
    pub k3: u8,
    pub count: usize,
    pub solver_accuracy: f64,
    pub probe_accuracy: f64,
    pub effect_size: f64,
    pub overlap: f64,
}

/// Generate one task's dataset for a given config.
pub fn generate_task(
    task: Task,
    corpus: &Corpus,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    digests: &SourceDigests,
) -> Result<Dataset> {
    match task {
        Task::Cloze => generate_cloze(corpus, store, knobs, digests),
        Task::Coherence => generate_coherence(corpus, store, knobs, digests),
        Task::Ordering => generate_ordering(corpus, store, knobs, digests),
    }
}

/// Score one dataset (any task) into a sweep row body.
pub(crate) fn score_dataset(
    ds: &Dataset,
    store: &EmbeddingStore,
) -> Result<(f64, f64, f64, f64)> {
    if ds.is_empty() {
        return Ok((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
    }
    let solver_acc = evaluate_solver(ds, store, Solver::for_task(ds.task))?;
    let features = extract_distance_features(ds, store)?;
    let probe_acc = match train_probe(&features, DEFAULT_EPOCHS, DEFAULT_LR, DEFAULT_L2) {
        Ok(model) => probe_accuracy(&model, &features),
        // Degenerate label distributions (tiny fixtures) have no probe story.
        Err(_) => f64::NAN,
    };
    let mut correct = Vec::with_capacity(features.rows.len());
    let mut incorrect = Vec::with_capacity(features.rows.len() * 3);
    for (row, &y) in features.rows.iter().zip(features.labels.iter()) {
        for (i, d) in row.iter().enumerate() {
            if i == usize::from(y) {
                correct.push(*d);
            } else {
                incorrect.push(*d);
            }
        }
    }
    let (_, effect_size) = gap_and_effect_size(&correct, &incorrect);
    let overlap = overlap_stats(ds).global_mean;
    Ok((solver_acc, probe_acc, effect_size, overlap))
}

/// Run all 8 knob tuples (canonical order) for one task and score each.
pub fn knob_sweep(
    corpus: &Corpus,
    store: &EmbeddingStore,
    base: &KnobConfig,
    task: Task,
) -> Result<Vec<SweepRow>> {
    let digests = SourceDigests::compute(corpus, store)?;
    let mut rows = Vec::with_capacity(8);
    for (k1, k2, k3) in KnobConfig::all_tuples() {
        let knobs = KnobConfig { k1, k2, k3, ..*base };
        let ds = generate_task(task, corpus, store, &knobs, &digests)?;
        let (solver_accuracy, probe_accuracy, effect_size, overlap) =
            score_dataset(&ds, store)?;
        rows.push(SweepRow {
            k1,
            k2,
            k3,
            count: ds.len(),
            solver_accuracy,
            probe_accuracy,
            effect_size,
            overlap,
        });
    }
    Ok(rows)
}

/// Aligned-column plain-text rendering of a sweep report.
pub fn render_sweep_text(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "k1 k2 k3   count  solver_acc  probe_acc  effect_size  overlap\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:>2} {:>2} {:>2} {:>7}  {:>10.4}  {:>9.4}  {:>11.4}  {:>7.4}\n",
            r.k1, r.k2, r.k3, r.count, r.solver_accuracy, r.probe_accuracy,
            r.effect_size, r.overlap
        ));
    }
    out
}
