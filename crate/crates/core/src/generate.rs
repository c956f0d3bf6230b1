//! Dataset generators: cloze, coherence, ordering, and the biased
//! no-removal contrast mode.
//!
//! Work is parallel over recipes; every recipe gets RNG substreams derived
//! from the run seed and its id, so parallel and serial runs are identical.
//! Plan streams are keyed by the task and the budget knob only — the same
//! questions are planned across the other knob settings, which makes knob
//! comparisons paired. Fill streams are keyed by the full knob tuple.

use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{filter_by_min_steps, Corpus, Recipe};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::knobs::KnobConfig;
use crate::question::{Dataset, QuestionRecord, SourceDigests, Task};
use crate::rng::StreamKey;

mod cloze;
mod coherence;
mod ordering;

pub use cloze::{generate_cloze, generate_legacy_cloze};
pub use coherence::generate_coherence;
pub use ordering::{
    generate_ordering, permutations_lex, sample_wrong_orderings, sequence_score,
    wrong_ordering_weights,
};

/// Pick one image id for a step (uniform when the step has several).
/// Consumes randomness only when a choice actually exists.
fn pick_step_image<'a>(
    recipe: &'a Recipe,
    step_idx: u32,
    rng: &mut impl Rng,
) -> &'a str {
    let ids = &recipe.steps[step_idx as usize].image_ids;
    if ids.len() == 1 {
        &ids[0]
    } else {
        &ids[rng.gen_range(0..ids.len())]
    }
}

/// Shuffle `n` pre-shuffle choice slots; returns `order` where
/// `order[post] = pre` (pre index 0 is the correct choice).
fn shuffle_order(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Run a per-recipe generator in parallel and assemble the dataset in
/// canonical order.
fn run_generation<F>(
    task: Task,
    corpus: &Corpus,
    knobs: &KnobConfig,
    legacy: bool,
    digests: &SourceDigests,
    per_recipe: F,
) -> Result<Dataset>
where
    F: Fn(&Recipe, &StreamKey) -> Result<Vec<QuestionRecord>> + Sync,
{
    knobs.validate()?;
    let filtered = filter_by_min_steps(corpus, knobs.min_steps);
    let key = StreamKey::new(knobs.seed);
    let per: Result<Vec<Vec<QuestionRecord>>> =
        filtered.recipes.par_iter().map(|r| per_recipe(r, &key)).collect();
    let records: Vec<QuestionRecord> = per?.into_iter().flatten().collect();
    Ok(Dataset::new(task, records, *knobs, legacy, digests, "all"))
}

/// Resolve a recipe's intern index in the store, for candidate exclusion.
fn source_recipe_idx(store: &EmbeddingStore, recipe: &Recipe) -> u32 {
    store
        .recipe_idx_by_name(&recipe.recipe_id)
        .unwrap_or(crate::embedding::NO_RECIPE)
}

/// All step indices of a recipe (the textual context of its questions).
fn context_steps(recipe: &Recipe) -> Vec<u32> {
    (0..recipe.step_count() as u32).collect()
}

/// Look up a store index, surfacing a missing embedding as an error.
fn require_idx(store: &EmbeddingStore, id: &str) -> Result<usize> {
    store.idx_of(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))
}

/// Sampling band derived from ring statistics: the inner ball
/// `[0, max(m−s, 0))` when `k2 = 0`, the annulus `[max(m−s, 0), m+s)` when
/// `k2 = 1`. Degenerate (empty) bands are allowed; the draw's widening
/// fallback handles them.
fn band_for(ring: &crate::embedding::RingStats, k2: u8) -> crate::embedding::Annulus {
    let lo = (ring.m_d - ring.s_d).max(0.0);
    if k2 == 0 {
        crate::embedding::Annulus::degenerate_ok(0.0, lo)
    } else {
        crate::embedding::Annulus::degenerate_ok(lo, ring.m_d + ring.s_d)
    }
}

/// Component-wise mean (f64) of the given store rows.
fn mean_of(store: &EmbeddingStore, idxs: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0f64; store.dim()];
    for &i in idxs {
        for (a, x) in acc.iter_mut().zip(store.vector_at(i).iter()) {
            *a += *x as f64;
        }
    }
    let n = idxs.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Recipe, Step};
    use crate::question::{QuestionBody, SourceDigests};
    use crate::synth::{generate_synthetic, SynthParams};

    fn fixture() -> (Corpus, EmbeddingStore, SourceDigests) {
        let params = SynthParams {
            n_recipes: 50,
            steps_lo: 5,
            steps_hi: 10,
            dim: 16,
            ..Default::default()
        };
        let (corpus, store) = generate_synthetic(&params).unwrap();
        let digests = SourceDigests::compute(&corpus, &store).unwrap();
        (corpus, store, digests)
    }

    fn small_knobs(k1: u8, k2: u8, k3: u8) -> KnobConfig {
        KnobConfig { k1, k2, k3, k_c: 25, ..Default::default() }
    }

    #[test]
    fn cloze_records_satisfy_structural_invariants() {
        let (corpus, store, digests) = fixture();
        let ds =
            generate_cloze(&corpus, &store, &small_knobs(0, 1, 0), &digests).unwrap();
        assert!(!ds.is_empty());
        for r in &ds.records {
            let QuestionBody::Cloze { slots, placeholder_pos, choices } = &r.question
            else {
                panic!("wrong body kind")
            };
            assert_eq!(slots.len(), 4);
            assert_eq!(choices.len(), 4);
            assert_eq!(slots.iter().filter(|s| s.is_none()).count(), 1);
            assert!(slots[*placeholder_pos as usize].is_none());
            // The correct choice is the recipe's own image; negatives never are.
            for (i, id) in choices.iter().enumerate() {
                let (owner, _) = store.meta(id).expect("synth images carry meta");
                if i == r.answer_index as usize {
                    assert_eq!(owner, r.recipe_id);
                } else {
                    assert_ne!(owner, r.recipe_id);
                }
            }
            // Choices are pairwise distinct.
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert_ne!(choices[i], choices[j]);
                }
            }
            // Non-fallback negatives respect the recorded band.
            let band = r.provenance.band.unwrap();
            let correct_vec = store.vector(&choices[r.answer_index as usize]).unwrap();
            for (i, id) in choices.iter().enumerate() {
                if i == r.answer_index as usize
                    || r.provenance.fallback_choices.contains(&(i as u8))
                {
                    continue;
                }
                let d =
                    crate::embedding::distance(store.vector(id).unwrap(), correct_vec)
                        .unwrap();
                assert!(
                    band.contains(d),
                    "negative {id} at {d} outside band {band:?}"
                );
            }
        }
    }

    #[test]
    fn cloze_runs_are_byte_identical() {
        let (corpus, store, digests) = fixture();
        let k = small_knobs(1, 1, 1);
        let a = generate_cloze(&corpus, &store, &k, &digests).unwrap();
        let b = generate_cloze(&corpus, &store, &k, &digests).unwrap();
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        let other = generate_cloze(
            &corpus,
            &store,
            &k.with_seed(8),
            &digests,
        )
        .unwrap();
        assert_ne!(a.to_jsonl().unwrap(), other.to_jsonl().unwrap());
    }

    #[test]
    fn tighter_budget_never_increases_counts() {
        let (corpus, store, digests) = fixture();
        let a = generate_cloze(&corpus, &store, &small_knobs(0, 0, 0), &digests).unwrap();
        let b = generate_cloze(&corpus, &store, &small_knobs(1, 0, 0), &digests).unwrap();
        assert!(a.len() >= b.len());
        // Per-recipe caps hold for both.
        for ds in [&a, &b] {
            let k1 = ds.manifest.config.k1;
            for rec in &corpus.recipes {
                let n = ds.records.iter().filter(|r| r.recipe_id == rec.recipe_id).count();
                let cap = if k1 == 0 { rec.step_count() / 2 } else { rec.step_count() / 3 };
                assert!(n <= cap, "recipe {} has {n} > cap {cap}", rec.recipe_id);
            }
        }
    }

    #[test]
    fn proximity_knob_preserves_exactly_one_closer_negative() {
        let (corpus, store, digests) = fixture();
        let k = KnobConfig { k3_prob: 1.0, ..small_knobs(0, 1, 1) };
        let ds = generate_cloze(&corpus, &store, &k, &digests).unwrap();
        let mut planted = 0;
        for r in &ds.records {
            assert!(r.provenance.knob3_applied, "k3_prob=1 must always flip heads");
            let QuestionBody::Cloze { slots, choices, .. } = &r.question else {
                panic!("wrong body kind")
            };
            let visible: Vec<&str> = slots.iter().filter_map(|s| s.as_deref()).collect();
            let qbar = store.mean_embedding(&visible).unwrap();
            let qd = store.distances_from_point(&qbar);
            let d_correct =
                qd[store.idx_of(&choices[r.answer_index as usize]).unwrap()];
            let closer = choices
                .iter()
                .enumerate()
                .filter(|(i, id)| {
                    *i != r.answer_index as usize
                        && qd[store.idx_of(id).unwrap()] < d_correct
                })
                .count();
            if !r.provenance.knob3_failed {
                planted += 1;
                assert_eq!(closer, 1, "planted record must have exactly one closer");
                let kc = r.provenance.knob3_choice.expect("planted slot recorded");
                assert_ne!(kc, r.answer_index);
            }
        }
        assert!(planted > 0, "some plants must succeed on the synthetic fixture");
    }

    #[test]
    fn legacy_negatives_sit_beyond_tau_and_plans_overlap() {
        let (corpus, store, digests) = fixture();
        let ds = generate_legacy_cloze(
            &corpus,
            &store,
            &KnobConfig::default(),
            &digests,
        )
        .unwrap();
        assert!(ds.manifest.legacy);
        // No-removal planning yields exactly floor(steps/2) questions.
        let expected: usize = corpus.recipes.iter().map(|r| r.step_count() / 2).sum();
        assert_eq!(ds.len(), expected);
        for r in &ds.records {
            let QuestionBody::Cloze { choices, .. } = &r.question else {
                panic!("wrong body kind")
            };
            let tau = r.provenance.tau.unwrap();
            let correct_vec = store.vector(&choices[r.answer_index as usize]).unwrap();
            for (i, id) in choices.iter().enumerate() {
                if i == r.answer_index as usize
                    || r.provenance.fallback_choices.contains(&(i as u8))
                {
                    continue;
                }
                let d =
                    crate::embedding::distance(store.vector(id).unwrap(), correct_vec)
                        .unwrap();
                assert!(d >= tau, "legacy negative {id} at {d} inside tau {tau}");
            }
            assert!(!r.provenance.knob3_applied);
        }
    }

    #[test]
    fn coherence_records_have_one_outsider_at_answer_position() {
        let (corpus, store, digests) = fixture();
        for k2 in [0, 1] {
            let ds = generate_coherence(
                &corpus,
                &store,
                &small_knobs(0, k2, 0),
                &digests,
            )
            .unwrap();
            assert!(!ds.is_empty());
            for r in &ds.records {
                let QuestionBody::Coherence { image_ids, choices } = &r.question
                else {
                    panic!("wrong body kind")
                };
                assert_eq!(image_ids.len(), 4);
                assert_eq!(choices, &vec![0, 1, 2, 3]);
                let external: Vec<usize> = image_ids
                    .iter()
                    .enumerate()
                    .filter(|(_, id)| {
                        store.meta(id).map(|(owner, _)| owner != r.recipe_id).unwrap_or(true)
                    })
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(external, vec![r.answer_index as usize]);
            }
        }
    }

    #[test]
    fn coherence_proximity_constraint_on_hand_fixture() {
        // Coherent images at 0, 1, 2; external candidates at 1.4 and 6.
        // Min pairwise coherent distance is 1 and the coherent mean is 1,
        // so only the 1.4 image satisfies the proximity constraint.
        let recipes = vec![
            Recipe {
                recipe_id: "src".into(),
                title: "t".into(),
                steps: (0..3)
                    .map(|k| Step {
                        tokens: vec!["s".into()],
                        image_ids: vec![format!("s{k}")],
                    })
                    .collect(),
            },
            Recipe {
                recipe_id: "o1".into(),
                title: "t".into(),
                steps: vec![Step { tokens: vec!["x".into()], image_ids: vec!["x14".into()] }],
            },
            Recipe {
                recipe_id: "o2".into(),
                title: "t".into(),
                steps: vec![Step { tokens: vec!["x".into()], image_ids: vec!["x6".into()] }],
            },
        ];
        let corpus = Corpus::new(recipes).unwrap();
        let mut store = EmbeddingStore::from_vectors(
            1,
            vec![
                ("s0".into(), vec![0.0]),
                ("s1".into(), vec![1.0]),
                ("s2".into(), vec![2.0]),
                ("x14".into(), vec![1.4]),
                ("x6".into(), vec![6.0]),
            ],
        )
        .unwrap();
        store.attach_meta(&corpus).unwrap();
        let digests = SourceDigests::compute(&corpus, &store).unwrap();
        let knobs = KnobConfig {
            k2: 1,
            k3: 1,
            k3_prob: 1.0,
            k_c: 2,
            min_steps: 3,
            ..Default::default()
        };
        for seed in 0..20 {
            let ds = generate_coherence(
                &corpus,
                &store,
                &knobs.with_seed(seed),
                &digests,
            )
            .unwrap();
            assert_eq!(ds.len(), 1);
            let r = &ds.records[0];
            assert!(r.provenance.knob3_applied && !r.provenance.knob3_failed);
            let QuestionBody::Coherence { image_ids, .. } = &r.question else {
                panic!("wrong body kind")
            };
            assert_eq!(image_ids[r.answer_index as usize], "x14");
        }
    }

    #[test]
    fn ordering_choices_are_permutations_with_one_ascending() {
        let (corpus, store, digests) = fixture();
        let ds =
            generate_ordering(&corpus, &store, &small_knobs(0, 1, 0), &digests).unwrap();
        assert!(!ds.is_empty());
        let by_id: std::collections::HashMap<&str, &Recipe> =
            corpus.recipes.iter().map(|r| (r.recipe_id.as_str(), r)).collect();
        for r in &ds.records {
            let QuestionBody::Ordering { choices } = &r.question else {
                panic!("wrong body kind")
            };
            assert_eq!(choices.len(), 4);
            let correct: Vec<String> = r
                .step_indices
                .iter()
                .map(|&s| by_id[r.recipe_id.as_str()].steps[s as usize].image_ids[0].clone())
                .collect();
            let mut sorted_ref = choices[0].clone();
            sorted_ref.sort();
            let ascending: Vec<usize> = choices
                .iter()
                .enumerate()
                .filter(|(_, c)| **c == correct)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(ascending, vec![r.answer_index as usize]);
            for c in choices {
                let mut s = c.clone();
                s.sort();
                assert_eq!(s, sorted_ref, "choices must permute the same ids");
            }
        }
    }

    #[test]
    fn ordering_ignores_proximity_knob() {
        let (corpus, store, digests) = fixture();
        let a = generate_ordering(&corpus, &store, &small_knobs(0, 1, 0), &digests)
            .unwrap();
        let b = generate_ordering(&corpus, &store, &small_knobs(0, 1, 1), &digests)
            .unwrap();
        let strip = |ds: &Dataset| -> Vec<(String, u32, QuestionBody, u8)> {
            ds.records
                .iter()
                .map(|r| {
                    (r.recipe_id.clone(), r.ordinal, r.question.clone(), r.answer_index)
                })
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn answer_positions_cover_all_slots() {
        let (corpus, store, digests) = fixture();
        let ds =
            generate_cloze(&corpus, &store, &small_knobs(0, 0, 0), &digests).unwrap();
        let mut seen = [0usize; 4];
        for r in &ds.records {
            seen[r.answer_index as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 0), "answers never land on some slot: {seen:?}");
    }
}
