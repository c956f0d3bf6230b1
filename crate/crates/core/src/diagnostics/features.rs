//! Per-choice distance features: the geometry a distance-reading shortcut
//! (or linear probe) gets to see, one row per question.

use rayon::prelude::*;

use crate::embedding::{dist_f32_f64, distance, EmbeddingStore};
use crate::error::{Error, Result};
use crate::generate::sequence_score;
use crate::question::{Dataset, QuestionBody, QuestionRecord};

/// One feature row per question (length = number of choices) plus the
/// answer label.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFeatures {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub n_a: usize,
}

/// The feature row of a single record:
/// * placeholder task — distance of each choice to the mean of the visible
///   slot images;
/// * odd-image task — mean distance of each presented image to the other
///   three;
/// * ordering task — path length of each candidate sequence.
pub(crate) fn feature_row(
    record: &QuestionRecord,
    store: &EmbeddingStore,
) -> Result<Vec<f64>> {
    match &record.question {
        QuestionBody::Cloze { slots, choices, .. } => {
            let visible: Vec<&str> =
                slots.iter().filter_map(|s| s.as_deref()).collect();
            let qbar = store.mean_embedding(&visible)?;
            choices
                .iter()
                .map(|id| {
                    let v = store
                        .vector(id)
                        .ok_or_else(|| Error::UnknownImage(id.clone()))?;
                    Ok(dist_f32_f64(v, &qbar))
                })
                .collect()
        }
        QuestionBody::Coherence { image_ids, .. } => {
            let vecs: Vec<&[f32]> = image_ids
                .iter()
                .map(|id| {
                    store.vector(id).ok_or_else(|| Error::UnknownImage(id.clone()))
                })
                .collect::<Result<_>>()?;
            let n = vecs.len();
            (0..n)
                .map(|i| {
                    let mut sum = 0.0;
                    for j in 0..n {
                        if j != i {
                            sum += distance(vecs[i], vecs[j])?;
                        }
                    }
                    Ok(sum / (n as f64 - 1.0))
                })
                .collect()
        }
        QuestionBody::Ordering { choices } => choices
            .iter()
            .map(|seq| {
                let ids: Vec<&str> = seq.iter().map(String::as_str).collect();
                sequence_score(store, &ids)
            })
            .collect(),
    }
}

/// Feature rows + labels for a whole dataset (parallel over records).
pub fn extract_distance_features(
    ds: &Dataset,
    store: &EmbeddingStore,
) -> Result<DistanceFeatures> {
    let rows: Vec<Vec<f64>> = ds
        .records
        .par_iter()
        .map(|r| feature_row(r, store))
        .collect::<Result<_>>()?;
    let n_a = rows.first().map_or(0, Vec::len);
    Ok(DistanceFeatures {
        rows,
        labels: ds.records.iter().map(|r| r.answer_index).collect(),
        n_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knobs::KnobConfig;
    use crate::question::{Provenance, SourceDigests, Task};

    fn store_2d() -> EmbeddingStore {
        EmbeddingStore::from_vectors(
            2,
            vec![
                ("p0".into(), vec![0.0, 0.0]),
                ("p1".into(), vec![1.0, 1.0]),
                ("p2".into(), vec![2.0, 2.0]),
                ("p5".into(), vec![5.0, 5.0]),
                ("p9".into(), vec![9.0, 9.0]),
            ],
        )
        .unwrap()
    }

    fn cloze_record(choices: Vec<&str>, answer: u8) -> QuestionRecord {
        QuestionRecord {
            task: Task::Cloze,
            recipe_id: "r".into(),
            ordinal: 0,
            context_step_indices: vec![0, 1, 2],
            step_indices: vec![0, 1, 2],
            question: QuestionBody::Cloze {
                slots: vec![Some("p0".into()), None, Some("p2".into())],
                placeholder_pos: 1,
                choices: choices.into_iter().map(String::from).collect(),
            },
            answer_index: answer,
            provenance: Provenance::new(0, 0, 0),
        }
    }

    #[test]
    fn cloze_row_matches_hand_geometry() {
        // Visible images (0,0) and (2,2): their mean is (1,1). A choice at
        // (1,1) is at distance 0; a choice at (5,5) at sqrt(32).
        let store = store_2d();
        let row = feature_row(&cloze_record(vec!["p1", "p5"], 0), &store).unwrap();
        assert!(row[0].abs() < 1e-12);
        assert!((row[1] - 32f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rows_permute_with_choices() {
        let store = store_2d();
        let a = feature_row(&cloze_record(vec!["p1", "p5", "p9"], 0), &store).unwrap();
        let b = feature_row(&cloze_record(vec!["p9", "p1", "p5"], 1), &store).unwrap();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[2]);
        assert_eq!(a[2], b[0]);
    }

    #[test]
    fn ordering_row_uses_path_length() {
        let store = EmbeddingStore::from_vectors(
            1,
            vec![
                ("a".into(), vec![0.0]),
                ("b".into(), vec![1.0]),
                ("c".into(), vec![2.0]),
                ("d".into(), vec![3.0]),
            ],
        )
        .unwrap();
        let rec = QuestionRecord {
            task: Task::Ordering,
            recipe_id: "r".into(),
            ordinal: 0,
            context_step_indices: vec![0, 1, 2, 3],
            step_indices: vec![0, 1, 2, 3],
            question: QuestionBody::Ordering {
                choices: vec![
                    vec!["a".into(), "b".into(), "c".into(), "d".into()],
                    vec!["a".into(), "c".into(), "b".into(), "d".into()],
                ],
            },
            answer_index: 0,
            provenance: Provenance::new(0, 0, 0),
        };
        let row = feature_row(&rec, &store).unwrap();
        assert_eq!(row[0], 3.0);
        assert_eq!(row[1], 5.0);
    }

    #[test]
    fn coherence_row_is_mean_distance_to_rest() {
        let store = EmbeddingStore::from_vectors(
            1,
            vec![
                ("a".into(), vec![0.0]),
                ("b".into(), vec![1.0]),
                ("c".into(), vec![2.0]),
                ("x".into(), vec![10.0]),
            ],
        )
        .unwrap();
        let rec = QuestionRecord {
            task: Task::Coherence,
            recipe_id: "r".into(),
            ordinal: 0,
            context_step_indices: vec![0, 1, 2],
            step_indices: vec![0, 1, 2],
            question: QuestionBody::Coherence {
                image_ids: vec!["a".into(), "b".into(), "c".into(), "x".into()],
                choices: vec![0, 1, 2, 3],
            },
            answer_index: 3,
            provenance: Provenance::new(0, 0, 0),
        };
        let row = feature_row(&rec, &store).unwrap();
        assert_eq!(row[0], (1.0 + 2.0 + 10.0) / 3.0);
        assert_eq!(row[3], (10.0 + 9.0 + 8.0) / 3.0);
        // The outsider has the largest mean distance.
        assert!(row[3] > row[0] && row[3] > row[1] && row[3] > row[2]);
    }

    #[test]
    fn extraction_collects_all_rows_and_labels() {
        let store = store_2d();
        let ds = Dataset::new(
            Task::Cloze,
            vec![cloze_record(vec!["p1", "p5"], 0), {
                let mut r = cloze_record(vec!["p5", "p1"], 1);
                r.ordinal = 1;
                r
            }],
            KnobConfig::default(),
            false,
            &SourceDigests::default(),
            "all",
        );
        let f = extract_distance_features(&ds, &store).unwrap();
        assert_eq!(f.rows.len(), 2);
        assert_eq!(f.labels, vec![0, 1]);
        assert_eq!(f.n_a, 2);
        assert!(f.rows.iter().flatten().all(|d| *d >= 0.0));
    }
}
