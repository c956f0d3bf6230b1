//! Question-overlap statistics: how much the step sets of a recipe's
//! questions share, measured as mean pairwise Jaccard similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::question::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    /// Mean pairwise Jaccard per recipe (recipes with ≥ 2 questions only).
    pub per_recipe: BTreeMap<String, f64>,
    /// Mean of the per-recipe means; 0 when no recipe qualifies.
    pub global_mean: f64,
}

/// Jaccard similarity of two ascending index sets.
fn jaccard(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-recipe and global mean pairwise Jaccard over question step sets.
pub fn overlap_stats(ds: &Dataset) -> OverlapStats {
    let mut groups: BTreeMap<&str, Vec<&[u32]>> = BTreeMap::new();
    for r in &ds.records {
        groups.entry(&r.recipe_id).or_default().push(&r.step_indices);
    }
    let mut per_recipe = BTreeMap::new();
    for (rid, sets) in groups {
        if sets.len() < 2 {
            continue;
        }
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..sets.len() {
            for j in (i + 1)..sets.len() {
                total += jaccard(sets[i], sets[j]);
                pairs += 1;
            }
        }
        per_recipe.insert(rid.to_string(), total / pairs as f64);
    }
    let global_mean = if per_recipe.is_empty() {
        0.0
    } else {
        per_recipe.values().sum::<f64>() / per_recipe.len() as f64
    };
    OverlapStats { per_recipe, global_mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knobs::KnobConfig;
    use crate::question::{
        Provenance, QuestionBody, QuestionRecord, SourceDigests, Task,
    };

    fn rec(recipe: &str, ordinal: u32, steps: Vec<u32>) -> QuestionRecord {
        QuestionRecord {
            task: Task::Cloze,
            recipe_id: recipe.into(),
            ordinal,
            context_step_indices: (0..10).collect(),
            step_indices: steps,
            question: QuestionBody::Cloze {
                slots: vec![None],
                placeholder_pos: 0,
                choices: vec![],
            },
            answer_index: 0,
            provenance: Provenance::new(0, 0, 0),
        }
    }

    fn ds(records: Vec<QuestionRecord>) -> Dataset {
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
    fn identical_sets_score_one() {
        let d = ds(vec![
            rec("r1", 0, vec![1, 2, 3, 4]),
            rec("r1", 1, vec![1, 2, 3, 4]),
        ]);
        let s = overlap_stats(&d);
        assert_eq!(s.per_recipe["r1"], 1.0);
        assert_eq!(s.global_mean, 1.0);
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let d = ds(vec![
            rec("r1", 0, vec![1, 2, 3, 4]),
            rec("r1", 1, vec![5, 6, 7, 8]),
        ]);
        assert_eq!(overlap_stats(&d).global_mean, 0.0);
    }

    #[test]
    fn partial_overlap_and_averaging() {
        // Jaccard({1,2,3,4},{3,4,5,6}) = 2/6.
        let d = ds(vec![
            rec("r1", 0, vec![1, 2, 3, 4]),
            rec("r1", 1, vec![3, 4, 5, 6]),
            rec("r2", 0, vec![1, 2, 3, 4]), // single question: no contribution
        ]);
        let s = overlap_stats(&d);
        assert!((s.per_recipe["r1"] - 2.0 / 6.0).abs() < 1e-12);
        assert!(!s.per_recipe.contains_key("r2"));
        assert!((s.global_mean - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_is_zero() {
        assert_eq!(overlap_stats(&ds(vec![])).global_mean, 0.0);
    }
}
