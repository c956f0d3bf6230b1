//! Odd-image-out generation: three in-recipe images plus one inserted
//! outsider drawn from a distance band around the coherent set.

use rand::Rng;

use crate::corpus::{Corpus, Recipe};
use crate::embedding::{annulus_members_with_fallback, EmbeddingStore};
use crate::error::Result;
use crate::knobs::KnobConfig;
use crate::plan::plan_questions_coherence;
use crate::question::{
    Dataset, Provenance, QuestionBody, QuestionRecord, SourceDigests, Task,
};

use super::{
    band_for, context_steps, mean_of, pick_step_image, require_idx,
    run_generation, source_recipe_idx,
};

/// Knob-controlled odd-image dataset over the whole corpus.
pub fn generate_coherence(
    corpus: &Corpus,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    digests: &SourceDigests,
) -> Result<Dataset> {
    run_generation(Task::Coherence, corpus, knobs, false, digests, |recipe, key| {
        let rid = recipe.recipe_id.as_bytes();
        let mut plan_rng = key.stream(&[b"coherence", b"plan", &[knobs.k1], rid]);
        let plans = plan_questions_coherence(recipe, knobs, &mut plan_rng);
        if plans.is_empty() {
            return Ok(Vec::new());
        }
        let mut fill_rng =
            key.stream(&[b"coherence", b"fill", &[knobs.k1, knobs.k2, knobs.k3], rid]);
        plans
            .iter()
            .enumerate()
            .map(|(ordinal, steps)| {
                fill_coherence_question(
                    recipe,
                    store,
                    knobs,
                    steps,
                    ordinal as u32,
                    &mut fill_rng,
                )
            })
            .collect()
    })
}

/// Indices of the `k` images nearest by the given distance array, excluding
/// one recipe; ties broken by image id. Also reports whether fewer than `k`
/// candidates existed.
fn k_nearest_idxs(
    store: &EmbeddingStore,
    dists: &[f64],
    k: usize,
    excluded_recipe: u32,
) -> (Vec<u32>, bool) {
    let mut cand: Vec<u32> = (0..store.len() as u32)
        .filter(|&j| store.recipe_idx_at(j as usize) != excluded_recipe)
        .collect();
    let shortfall = cand.len() < k;
    let take = k.min(cand.len());
    if take < cand.len() {
        cand.select_nth_unstable_by(take, |&a, &b| {
            dists[a as usize]
                .total_cmp(&dists[b as usize])
                .then_with(|| store.id_at(a as usize).cmp(store.id_at(b as usize)))
        });
        cand.truncate(take);
    }
    (cand, shortfall)
}

fn fill_coherence_question(
    recipe: &Recipe,
    store: &EmbeddingStore,
    knobs: &KnobConfig,
    steps: &[u32],
    ordinal: u32,
    rng: &mut impl Rng,
) -> Result<QuestionRecord> {
    let coherent_ids: Vec<String> = steps
        .iter()
        .map(|&s| pick_step_image(recipe, s, rng).to_string())
        .collect();
    let coherent_idx: Vec<usize> = coherent_ids
        .iter()
        .map(|id| require_idx(store, id))
        .collect::<Result<_>>()?;
    let src_recipe = source_recipe_idx(store, recipe);

    // Candidate pool: union of the per-image nearest-neighbor sets, with
    // each candidate scored by its distance to the nearest coherent image.
    let dist_arrays: Vec<Vec<f64>> =
        coherent_idx.iter().map(|&i| store.distances_from(i)).collect();
    let mut ring_shortfall = false;
    let mut in_union = vec![false; store.len()];
    for da in &dist_arrays {
        let (nearest, sf) = k_nearest_idxs(store, da, knobs.k_c, src_recipe);
        ring_shortfall |= sf;
        for j in nearest {
            in_union[j as usize] = true;
        }
    }
    let union: Vec<u32> =
        (0..store.len() as u32).filter(|&j| in_union[j as usize]).collect();
    let min_dists: Vec<f64> = union
        .iter()
        .map(|&j| {
            dist_arrays
                .iter()
                .map(|da| da[j as usize])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let ring = crate::embedding::ring_stats_from_distances(&min_dists)?;
    let band = band_for(&ring, knobs.k2);

    // Band membership in the union's local index space.
    let local: Vec<u32> = (0..union.len() as u32).collect();
    let (mut members, fallback, _hi) = annulus_members_with_fallback(
        &local,
        &min_dists,
        band,
        &recipe.recipe_id,
        |a, b| store.id_at(union[a as usize] as usize).cmp(store.id_at(union[b as usize] as usize)),
    )?;

    // Proximity knob: additionally require the outsider to sit closer to the
    // coherent centroid than the coherent images sit to each other.
    let mut knob3_applied = false;
    let mut knob3_failed = false;
    if knobs.k3 == 1 {
        knob3_applied = rng.gen_bool(knobs.k3_prob);
        if knob3_applied {
            let centroid = mean_of(store, &coherent_idx);
            let min_pairwise = {
                let d01 = dist_arrays[0][coherent_idx[1]];
                let d02 = dist_arrays[0][coherent_idx[2]];
                let d12 = dist_arrays[1][coherent_idx[2]];
                d01.min(d02).min(d12)
            };
            let cd = store.distances_from_point(&centroid);
            let tight: Vec<u32> = members
                .iter()
                .copied()
                .filter(|&l| cd[union[l as usize] as usize] < min_pairwise)
                .collect();
            if tight.is_empty() {
                knob3_failed = true;
            } else {
                members = tight;
            }
        }
    }

    let outsider_local = members[rng.gen_range(0..members.len())];
    let outsider = store.id_at(union[outsider_local as usize] as usize).to_string();

    // Uniform insertion position; the position is the answer.
    let p = rng.gen_range(0..knobs.n_a);
    let mut image_ids = coherent_ids.clone();
    image_ids.insert(p, outsider);

    let mut prov = Provenance::new(knobs.k1, knobs.k2, knobs.k3);
    prov.ring = Some(ring);
    prov.band = Some(band);
    prov.ring_shortfall = ring_shortfall;
    prov.fallback_choices = if fallback { vec![p as u8] } else { Vec::new() };
    prov.knob3_applied = knob3_applied;
    prov.knob3_failed = knob3_failed;

    Ok(QuestionRecord {
        task: Task::Coherence,
        recipe_id: recipe.recipe_id.clone(),
        ordinal,
        context_step_indices: context_steps(recipe),
        step_indices: steps.to_vec(),
        question: QuestionBody::Coherence {
            image_ids,
            choices: (0..knobs.n_a as u8).collect(),
        },
        answer_index: p as u8,
        provenance: prov,
    })
}
