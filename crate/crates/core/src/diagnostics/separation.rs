//! How separable correct and incorrect choices are by raw distance alone:
//! shared-bin histograms, mean gap, and a pooled-std effect size.

use serde::{Deserialize, Serialize};

use crate::diagnostics::features::extract_distance_features;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::question::{Dataset, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `bins + 1` edges shared by both histograms.
    pub bin_edges: Vec<f64>,
    pub histogram_correct: Vec<u64>,
    pub histogram_incorrect: Vec<u64>,
    /// mean(incorrect distances) − mean(correct distances).
    pub mean_gap: f64,
    /// `mean_gap` divided by the pooled standard deviation (0 when the
    /// pooled std is 0).
    pub effect_size: f64,
}

impl SeparationReport {
    /// CSV rows `bin_lo,bin_hi,correct_count,incorrect_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,correct_count,incorrect_count\n");
        for i in 0..self.histogram_correct.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.histogram_correct[i],
                self.histogram_incorrect[i]
            ));
        }
        out
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64], m: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Gap and pooled-std effect size between incorrect and correct values.
pub(crate) fn gap_and_effect_size(correct: &[f64], incorrect: &[f64]) -> (f64, f64) {
    if correct.is_empty() || incorrect.is_empty() {
        return (0.0, 0.0);
    }
    let (mc, mi) = (mean(correct), mean(incorrect));
    let gap = mi - mc;
    let (n1, n2) = (correct.len() as f64, incorrect.len() as f64);
    let pooled = if n1 + n2 > 2.0 {
        (((n1 - 1.0) * var(correct, mc) + (n2 - 1.0) * var(incorrect, mi))
            / (n1 + n2 - 2.0))
            .sqrt()
    } else {
        0.0
    };
    let effect = if pooled > 0.0 { gap / pooled } else { 0.0 };
    (gap, effect)
}

/// Split a dataset's per-choice distances by correctness and report their
/// separation. Defined for the placeholder and odd-image tasks, whose
/// features are point distances.
pub fn separation_report(
    ds: &Dataset,
    store: &EmbeddingStore,
    bins: usize,
) -> Result<SeparationReport> {
    if ds.task == Task::Ordering {
        return Err(Error::TaskMismatch {
            dataset: ds.task.name().to_string(),
            expected: "cloze or coherence".to_string(),
        });
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be positive".into()));
    }
    let f = extract_distance_features(ds, store)?;
    let mut correct = Vec::with_capacity(f.rows.len());
    let mut incorrect = Vec::with_capacity(f.rows.len() * 3);
    for (row, &y) in f.rows.iter().zip(f.labels.iter()) {
        for (i, d) in row.iter().enumerate() {
            if i == usize::from(y) {
                correct.push(*d);
            } else {
                incorrect.push(*d);
            }
        }
    }
    let all: Vec<f64> = correct.iter().chain(incorrect.iter()).copied().collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if all.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let bucket = |d: f64| -> usize {
        (((d - lo) / width) as usize).min(bins - 1)
    };
    let mut hc = vec![0u64; bins];
    let mut hi_ = vec![0u64; bins];
    for &d in &correct {
        hc[bucket(d)] += 1;
    }
    for &d in &incorrect {
        hi_[bucket(d)] += 1;
    }
    let (mean_gap, effect_size) = gap_and_effect_size(&correct, &incorrect);
    Ok(SeparationReport {
        bin_edges: edges,
        histogram_correct: hc,
        histogram_incorrect: hi_,
        mean_gap,
        effect_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knobs::KnobConfig;
    use crate::question::{Provenance, QuestionBody, QuestionRecord, SourceDigests};

    fn record(choices: Vec<&str>, answer: u8, ordinal: u32) -> QuestionRecord {
        QuestionRecord {
            task: Task::Cloze,
            recipe_id: "r".into(),
            ordinal,
            context_step_indices: vec![0, 1],
            step_indices: vec![0, 1],
            question: QuestionBody::Cloze {
                slots: vec![Some("q".into()), None],
                placeholder_pos: 1,
                choices: choices.into_iter().map(String::from).collect(),
            },
            answer_index: answer,
            provenance: Provenance::new(0, 0, 0),
        }
    }

    fn dataset(records: Vec<QuestionRecord>) -> Dataset {
        Dataset::new(
            Task::Cloze,
            records,
            KnobConfig::default(),
            false,
            &SourceDigests::default(),
            "all",
        )
    }

    #[test]
    fn equidistant_choices_are_degenerate() {
        // q at 0; both choices at 1 and -1: all distances equal 1.
        let store = EmbeddingStore::from_vectors(
            1,
            vec![
                ("q".into(), vec![0.0]),
                ("a".into(), vec![1.0]),
                ("b".into(), vec![-1.0]),
            ],
        )
        .unwrap();
        let ds = dataset(vec![record(vec!["a", "b"], 0, 0)]);
        let rep = separation_report(&ds, &store, 4).unwrap();
        assert_eq!(rep.mean_gap, 0.0);
        assert_eq!(rep.effect_size, 0.0);
    }

    #[test]
    fn histogram_counts_match_record_counts() {
        let store = EmbeddingStore::from_vectors(
            1,
            vec![
                ("q".into(), vec![0.0]),
                ("a".into(), vec![1.0]),
                ("b".into(), vec![2.0]),
                ("c".into(), vec![3.0]),
                ("d".into(), vec![4.0]),
            ],
        )
        .unwrap();
        let ds = dataset(vec![
            record(vec!["a", "b", "c", "d"], 0, 0),
            record(vec!["d", "c", "b", "a"], 3, 1),
        ]);
        let rep = separation_report(&ds, &store, 5).unwrap();
        assert_eq!(rep.histogram_correct.iter().sum::<u64>(), 2);
        assert_eq!(rep.histogram_incorrect.iter().sum::<u64>(), 6);
        assert_eq!(rep.bin_edges.len(), 6);
        // Correct choice "a" is nearest both times → positive gap here.
        assert!(rep.mean_gap > 0.0);
        assert!(rep.effect_size > 0.0);
        let csv = rep.to_csv();
        assert!(csv.starts_with("bin_lo,bin_hi,correct_count,incorrect_count\n"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn effect_size_is_scale_invariant() {
        let base: Vec<(String, Vec<f32>)> = vec![
            ("q".into(), vec![0.0, 0.0]),
            ("a".into(), vec![1.0, 0.5]),
            ("b".into(), vec![2.0, 1.0]),
            ("c".into(), vec![3.0, -1.0]),
            ("d".into(), vec![4.0, 2.0]),
        ];
        let scaled: Vec<(String, Vec<f32>)> = base
            .iter()
            .map(|(id, v)| (id.clone(), v.iter().map(|x| x * 7.5).collect()))
            .collect();
        let s1 = EmbeddingStore::from_vectors(2, base).unwrap();
        let s2 = EmbeddingStore::from_vectors(2, scaled).unwrap();
        let ds = dataset(vec![
            record(vec!["a", "b", "c", "d"], 0, 0),
            record(vec!["d", "a", "b", "c"], 1, 1),
        ]);
        let r1 = separation_report(&ds, &s1, 8).unwrap();
        let r2 = separation_report(&ds, &s2, 8).unwrap();
        assert!((r1.effect_size - r2.effect_size).abs() < 1e-9);
        assert!((r2.mean_gap - 7.5 * r1.mean_gap).abs() < 1e-6);
    }

    #[test]
    fn ordering_task_is_rejected() {
        let store = EmbeddingStore::from_vectors(1, vec![("q".into(), vec![0.0])]).unwrap();
        let mut ds = dataset(vec![]);
        ds.task = Task::Ordering;
        assert!(separation_report(&ds, &store, 4).is_err());
    }
}
