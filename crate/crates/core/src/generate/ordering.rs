//! Sequence-ordering generation: the correct step order of four images plus
//! three wrong orderings drawn uniformly or score-weighted.

use rand::Rng;

use crate::corpus::{Corpus, Recipe};
use crate::embedding::{distance, EmbeddingStore};
use crate::error::{Error, Result};
use crate::knobs::KnobConfig;
use crate::plan::{plan_questions_knob1, QuestionPlan};
use crate::question::{
    Dataset, Provenance, QuestionBody, QuestionRecord, SourceDigests, Task,
};

use super::{context_steps, pick_step_image, run_generation, shuffle_order};

/// All 24 permutations of `(0,1,2,3)` in lexicographic order; index 0 is the
/// identity.
pub fn permutations_lex() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            if b == a {
                continue;
            }
            for c in 0..4 {
                if c == a || c == b {
                    continue;
                }
                let d = 6 - a - b - c;
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

/// Sum three nonnegative parts smallest-first, so that any two sequences
/// with the same multiset of pair distances (e.g. a sequence and its
/// reversal) get bit-identical scores.
fn sum_parts(mut parts: [f64; 3]) -> f64 {
    parts.sort_by(f64::total_cmp);
    parts[0] + parts[1] + parts[2]
}

/// Path length of a 4-image sequence: the sum of its three consecutive
/// pairwise embedding distances.
pub fn sequence_score(store: &EmbeddingStore, ids: &[&str]) -> Result<f64> {
    if ids.len() != 4 {
        return Err(Error::InvalidConfig(format!(
            "sequence score needs exactly 4 ids, got {}",
            ids.len()
        )));
    }
    let vecs: Vec<&[f32]> = ids
        .iter()
        .map(|id| {
            store.vector(id).ok_or_else(|| Error::UnknownImage(id.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok(sum_parts([
        distance(vecs[0], vecs[1])?,
        distance(vecs[1], vecs[2])?,
        distance(vecs[2], vecs[3])?,
    ]))
}

/// The 23 non-identity orderings of 4 images (lexicographic order) with
/// their path-length weights.
pub fn wrong_ordering_weights(
    store: &EmbeddingStore,
    ids: &[&str],
) -> Result<Vec<([usize; 4], f64)>> {
    if ids.len() != 4 {
        return Err(Error::InvalidConfig(format!(
            "ordering questions need exactly 4 ids, got {}",
            ids.len()
        )));
    }
    let vecs: Vec<&[f32]> = ids
        .iter()
        .map(|id| {
            store.vector(id).ok_or_else(|| Error::UnknownImage(id.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut pd = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = distance(vecs[i], vecs[j])?;
            pd[i][j] = d;
            pd[j][i] = d;
        }
    }
    Ok(permutations_lex()
        .into_iter()
        .skip(1)
        .map(|p| (p, sum_parts([pd[p[0]][p[1]], pd[p[1]][p[2]], pd[p[2]][p[3]]])))
        .collect())
}

/// Draw 3 distinct wrong orderings: uniformly, or with probability
/// proportional to weight (sequential draws, renormalizing after each).
/// All-zero weights fall back to uniform; the flag reports that.
pub fn sample_wrong_orderings(
    weighted: &[([usize; 4], f64)],
    use_weights: bool,
    rng: &mut impl Rng,
) -> (Vec<[usize; 4]>, bool) {
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let degenerate = use_weights && total <= 0.0;
    let proportional = use_weights && !degenerate;
    let mut rem: Vec<([usize; 4], f64)> = weighted.to_vec();
    let mut rem_total = total;
    let mut picked = Vec::with_capacity(3);
    for _ in 0..3 {
        let at = if proportional {
            let x = rng.gen::<f64>() * rem_total;
            let mut acc = 0.0;
            let mut at = rem.len() - 1;
            for (i, (_, w)) in rem.iter().enumerate() {
                acc += w;
                if x < acc {
                    at = i;
                    break;
                }
            }
            at
        } else {
            rng.gen_range(0..rem.len())
        };
        let (perm, w) = rem.remove(at);
        picked.push(perm);
        rem_total -= w;
    }
    (picked, degenerate)
}

/// Knob-controlled ordering dataset. The proximity knob does not apply to
/// this task, so its value does not influence the output stream.
pub fn generate_ordering(
    corpus: &Corpus,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    digests: &SourceDigests,
) -> Result<Dataset> {
    run_generation(Task::Ordering, corpus, knobs, false, digests, |recipe, key| {
        let rid = recipe.recipe_id.as_bytes();
        let mut plan_rng = key.stream(&[b"ordering", b"plan", &[knobs.k1], rid]);
        let plans = plan_questions_knob1(recipe, knobs, &mut plan_rng);
        if plans.is_empty() {
            return Ok(Vec::new());
        }
        let mut fill_rng =
            key.stream(&[b"ordering", b"fill", &[knobs.k1, knobs.k2], rid]);
        plans
            .iter()
            .enumerate()
            .map(|(ordinal, plan)| {
                fill_ordering_question(
                    recipe,
                    store,
                    knobs,
                    plan,
                    ordinal as u32,
                    &mut fill_rng,
                )
            })
            .collect()
    })
}

fn fill_ordering_question(
    recipe: &Recipe,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    plan: &QuestionPlan,
    ordinal: u32,
    rng: &mut impl Rng,
) -> Result<QuestionRecord> {
    let slot_ids: Vec<String> = plan
        .step_indices
        .iter()
        .map(|&s| pick_step_image(recipe, s, rng).to_string())
        .collect();
    let id_refs: Vec<&str> = slot_ids.iter().map(String::as_str).collect();
    let weighted = wrong_ordering_weights(store, &id_refs)?;
    let (picked, weights_degenerate) =
        sample_wrong_orderings(&weighted, knobs.k2 == 1, rng);

    let seq_for = |p: &[usize; 4]| -> Vec<String> {
        p.iter().map(|&i| slot_ids[i].clone()).collect()
    };
    let pre_choices: Vec<Vec<String>> = std::iter::once([0, 1, 2, 3])
        .chain(picked.into_iter())
        .map(|p| seq_for(&p))
        .collect();
    let order = shuffle_order(knobs.n_a, rng);
    let choices: Vec<Vec<String>> =
        order.iter().map(|&pre| pre_choices[pre].clone()).collect();
    let answer_index =
        order.iter().position(|&pre| pre == 0).expect("correct ordering present") as u8;

    let mut prov = Provenance::new(knobs.k1, knobs.k2, knobs.k3);
    prov.weights_degenerate = weights_degenerate;

    Ok(QuestionRecord {
        task: Task::Ordering,
        recipe_id: recipe.recipe_id.clone(),
        ordinal,
        context_step_indices: context_steps(recipe),
        step_indices: plan.step_indices.clone(),
        question: QuestionBody::Ordering { choices },
        answer_index,
        provenance: prov,
    })
}
