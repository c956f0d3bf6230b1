//! Fill-the-placeholder generation, in both the knob-controlled form and
//! the no-removal / far-negatives contrast form.

use rand::Rng;

use crate::corpus::{Corpus, Recipe};
use crate::embedding::{sample_in_annulus_core, EmbeddingStore};
use crate::error::{Error, Result};
use crate::knobs::KnobConfig;
use crate::plan::{plan_questions_knob1, plan_questions_legacy, QuestionPlan};
use crate::question::{
    Dataset, Provenance, QuestionBody, QuestionRecord, SourceDigests, Task,
};

use super::{
    band_for, context_steps, pick_step_image, require_idx, run_generation,
    shuffle_order, source_recipe_idx,
};

/// Knob-controlled placeholder dataset over the whole corpus.
pub fn generate_cloze(
    corpus: &Corpus,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    digests: &SourceDigests,
) -> Result<Dataset> {
    run_generation(Task::Cloze, corpus, knobs, false, digests, |recipe, key| {
        let rid = recipe.recipe_id.as_bytes();
        let mut plan_rng = key.stream(&[b"cloze", b"plan", &[knobs.k1], rid]);
        let plans = plan_questions_knob1(recipe, knobs, &mut plan_rng);
        if plans.is_empty() {
            return Ok(Vec::new());
        }
        let mut fill_rng =
            key.stream(&[b"cloze", b"fill", &[knobs.k1, knobs.k2, knobs.k3], rid]);
        plans
            .iter()
            .enumerate()
            .map(|(ordinal, plan)| {
                fill_cloze_question(
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

/// Build one placeholder question from a plan: resolve slot images, draw the
/// banded negatives, optionally plant a proximity negative, and shuffle.
fn fill_cloze_question(
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
    let correct = slot_ids[plan.placeholder_pos].clone();
    let correct_idx = require_idx(store, &correct)?;
    let src_recipe = source_recipe_idx(store, recipe);

    // Radial geometry around the correct choice.
    let dists = store.distances_from(correct_idx);
    let (ring_d, ring_shortfall) =
        store.ring_distances(correct_idx, &dists, knobs.k_c, src_recipe);
    let ring = crate::embedding::ring_stats_from_distances(&ring_d)?;
    let band = band_for(&ring, knobs.k2);

    // Sequential banded draws; each draw excludes everything drawn so far.
    let n_neg = knobs.n_a - 1;
    let mut negatives: Vec<u32> = Vec::with_capacity(n_neg);
    let mut neg_fallback: Vec<bool> = Vec::with_capacity(n_neg);
    for _ in 0..n_neg {
        let eligible: Vec<u32> = (0..store.len() as u32)
            .filter(|&j| {
                j as usize != correct_idx
                    && store.recipe_idx_at(j as usize) != src_recipe
                    && !negatives.contains(&j)
            })
            .collect();
        let (pick, _d, fb, _hi) =
            sample_in_annulus_core(&eligible, &dists, band, &correct, rng, |a, b| {
                store.id_at(a as usize).cmp(store.id_at(b as usize))
            })?;
        negatives.push(pick);
        neg_fallback.push(fb);
    }

    // Proximity knob: on a coin flip, swap one negative for an in-band image
    // strictly closer to the visible-slot mean than the correct choice.
    let mut knob3_applied = false;
    let mut knob3_failed = false;
    let mut knob3_target: Option<usize> = None;
    if knobs.k3 == 1 {
        knob3_applied = rng.gen_bool(knobs.k3_prob);
        if knob3_applied {
            let visible: Vec<usize> = plan
                .step_indices
                .iter()
                .enumerate()
                .filter(|(pos, _)| *pos != plan.placeholder_pos)
                .map(|(pos, _)| require_idx(store, &slot_ids[pos]))
                .collect::<Result<_>>()?;
            let qbar = super::mean_of(store, &visible);
            let qd = store.distances_from_point(&qbar);
            let d_correct = qd[correct_idx];
            let already_closer: Vec<usize> = (0..n_neg)
                .filter(|&i| qd[negatives[i] as usize] < d_correct)
                .collect();
            let target = rng.gen_range(0..n_neg);
            let pool: Vec<u32> = (0..store.len() as u32)
                .filter(|&j| {
                    let ju = j as usize;
                    ju != correct_idx
                        && store.recipe_idx_at(ju) != src_recipe
                        && !negatives.contains(&j)
                        && band.contains(dists[ju])
                        && qd[ju] < d_correct
                })
                .collect();
            // Replacing `target` must leave exactly one closer negative, so
            // any *other* already-closer negative forces the unchanged path.
            let consistent = already_closer.iter().all(|&i| i == target);
            if pool.is_empty() || !consistent {
                knob3_failed = true;
            } else {
                negatives[target] = pool[rng.gen_range(0..pool.len())];
                neg_fallback[target] = false;
                knob3_target = Some(target);
            }
        }
    }

    // Shuffle choices; pre-shuffle index 0 is the correct one.
    let pre_ids: Vec<&str> = std::iter::once(correct.as_str())
        .chain(negatives.iter().map(|&j| store.id_at(j as usize)))
        .collect();
    let order = shuffle_order(knobs.n_a, rng);
    let choices: Vec<String> =
        order.iter().map(|&pre| pre_ids[pre].to_string()).collect();
    let answer_index =
        order.iter().position(|&pre| pre == 0).expect("correct choice present") as u8;
    let mut fallback_choices: Vec<u8> = order
        .iter()
        .enumerate()
        .filter(|(_, &pre)| pre > 0 && neg_fallback[pre - 1])
        .map(|(post, _)| post as u8)
        .collect();
    fallback_choices.sort_unstable();
    let knob3_choice = knob3_target.map(|t| {
        order.iter().position(|&pre| pre == t + 1).expect("negative present") as u8
    });

    let slots: Vec<Option<String>> = slot_ids
        .iter()
        .enumerate()
        .map(|(pos, id)| if pos == plan.placeholder_pos { None } else { Some(id.clone()) })
        .collect();

    let mut prov = Provenance::new(knobs.k1, knobs.k2, knobs.k3);
    prov.ring = Some(ring);
    prov.band = Some(band);
    prov.ring_shortfall = ring_shortfall;
    prov.fallback_choices = fallback_choices;
    prov.knob3_applied = knob3_applied;
    prov.knob3_failed = knob3_failed;
    prov.knob3_choice = knob3_choice;

    Ok(QuestionRecord {
        task: Task::Cloze,
        recipe_id: recipe.recipe_id.clone(),
        ordinal,
        context_step_indices: context_steps(recipe),
        step_indices: plan.step_indices.clone(),
        question: QuestionBody::Cloze {
            slots,
            placeholder_pos: plan.placeholder_pos as u8,
            choices,
        },
        answer_index,
        provenance: prov,
    })
}

/// Contrast dataset reproducing the distance-biased construction: overlapping
/// plans (no step removal) and negatives drawn uniformly beyond
/// `τ = m_d + s_d` from the correct choice.
pub fn generate_legacy_cloze(
    corpus: &Corpus,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    digests: &SourceDigests,
) -> Result<Dataset> {
    run_generation(Task::Cloze, corpus, knobs, true, digests, |recipe, key| {
        let rid = recipe.recipe_id.as_bytes();
        let mut plan_rng = key.stream(&[b"cloze_legacy", b"plan", rid]);
        let plans = plan_questions_legacy(recipe, knobs, &mut plan_rng);
        if plans.is_empty() {
            return Ok(Vec::new());
        }
        let mut fill_rng = key.stream(&[b"cloze_legacy", b"fill", rid]);
        plans
            .iter()
            .enumerate()
            .map(|(ordinal, plan)| {
                fill_legacy_question(
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

fn fill_legacy_question(
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
    let correct = slot_ids[plan.placeholder_pos].clone();
    let correct_idx = require_idx(store, &correct)?;
    let src_recipe = source_recipe_idx(store, recipe);

    let dists = store.distances_from(correct_idx);
    let (ring_d, ring_shortfall) =
        store.ring_distances(correct_idx, &dists, knobs.k_c, src_recipe);
    let ring = crate::embedding::ring_stats_from_distances(&ring_d)?;
    let tau = ring.m_d + ring.s_d;

    let n_neg = knobs.n_a - 1;
    let eligible: Vec<u32> = (0..store.len() as u32)
        .filter(|&j| {
            j as usize != correct_idx && store.recipe_idx_at(j as usize) != src_recipe
        })
        .collect();
    let mut far: Vec<u32> =
        eligible.iter().copied().filter(|&j| dists[j as usize] >= tau).collect();
    let (negatives, neg_fallback) = if far.len() >= n_neg {
        let mut picked = Vec::with_capacity(n_neg);
        for _ in 0..n_neg {
            picked.push(far.swap_remove(rng.gen_range(0..far.len())));
        }
        (picked, vec![false; n_neg])
    } else {
        // Not enough far images: take the farthest available and flag them.
        if eligible.len() < n_neg {
            return Err(Error::NoCandidates { center: correct.clone() });
        }
        let mut all = eligible.clone();
        all.sort_by(|&a, &b| {
            dists[b as usize]
                .total_cmp(&dists[a as usize])
                .then_with(|| store.id_at(a as usize).cmp(store.id_at(b as usize)))
        });
        all.truncate(n_neg);
        (all, vec![true; n_neg])
    };

    let pre_ids: Vec<&str> = std::iter::once(correct.as_str())
        .chain(negatives.iter().map(|&j| store.id_at(j as usize)))
        .collect();
    let order = shuffle_order(knobs.n_a, rng);
    let choices: Vec<String> =
        order.iter().map(|&pre| pre_ids[pre].to_string()).collect();
    let answer_index =
        order.iter().position(|&pre| pre == 0).expect("correct choice present") as u8;
    let mut fallback_choices: Vec<u8> = order
        .iter()
        .enumerate()
        .filter(|(_, &pre)| pre > 0 && neg_fallback[pre - 1])
        .map(|(post, _)| post as u8)
        .collect();
    fallback_choices.sort_unstable();

    let slots: Vec<Option<String>> = slot_ids
        .iter()
        .enumerate()
        .map(|(pos, id)| if pos == plan.placeholder_pos { None } else { Some(id.clone()) })
        .collect();

    let mut prov = Provenance::new(knobs.k1, knobs.k2, knobs.k3);
    prov.legacy = true;
    prov.ring = Some(ring);
    prov.tau = Some(tau);
    prov.ring_shortfall = ring_shortfall;
    prov.fallback_choices = fallback_choices;

    Ok(QuestionRecord {
        task: Task::Cloze,
        recipe_id: recipe.recipe_id.clone(),
        ordinal,
        context_step_indices: context_steps(recipe),
        step_indices: plan.step_indices.clone(),
        question: QuestionBody::Cloze {
            slots,
            placeholder_pos: plan.placeholder_pos as u8,
            choices,
        },
        answer_index,
        provenance: prov,
    })
}
