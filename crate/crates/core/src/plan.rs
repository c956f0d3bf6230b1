//! Question planning: which steps each question uses, under the
//! question-budget knob or the no-removal contrast mode.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::corpus::Recipe;
use crate::knobs::KnobConfig;

/// One planned question: `n_q` ascending step indices plus which slot is the
/// placeholder (the correct choice's step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionPlan {
    pub step_indices: Vec<u32>,
    pub placeholder_pos: usize,
}

fn draw_distinct_sorted(pool: &[u32], n: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut picked: Vec<u32> =
        sample_indices(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    picked
}

/// Budgeted planning: repeatedly sample `n_q` distinct steps from the
/// remaining pool, retire the placeholder's step (plus one extra random pool
/// step when `k1 = 1`), and stop at the per-recipe cap or pool exhaustion.
/// Recipes that cannot host a single question yield an empty plan list.
pub fn plan_questions_knob1(
    recipe: &Recipe,
    knobs: &KnobConfig,
    rng: &mut impl Rng,
) -> Vec<QuestionPlan> {
    if recipe.step_count() < knobs.min_steps {
        return Vec::new();
    }
    let mut pool: Vec<u32> = recipe.image_bearing_steps().iter().map(|&i| i as u32).collect();
    let cap = knobs.question_cap(recipe.step_count());
    let mut plans = Vec::new();
    while plans.len() < cap && pool.len() >= knobs.n_q {
        let step_indices = draw_distinct_sorted(&pool, knobs.n_q, rng);
        let placeholder_pos = rng.gen_range(0..knobs.n_q);
        let placeholder_step = step_indices[placeholder_pos];
        pool.retain(|&s| s != placeholder_step);
        if knobs.k1 == 1 && !pool.is_empty() {
            let extra = pool[rng.gen_range(0..pool.len())];
            pool.retain(|&s| s != extra);
        }
        plans.push(QuestionPlan { step_indices, placeholder_pos });
    }
    plans
}

/// No-removal contrast planning: exactly `floor(steps/2)` independent draws
/// from the full pool (overlapping questions permitted by construction).
pub fn plan_questions_legacy(
    recipe: &Recipe,
    knobs: &KnobConfig,
    rng: &mut impl Rng,
) -> Vec<QuestionPlan> {
    if recipe.step_count() < knobs.min_steps {
        return Vec::new();
    }
    let pool: Vec<u32> = recipe.image_bearing_steps().iter().map(|&i| i as u32).collect();
    if pool.len() < knobs.n_q {
        return Vec::new();
    }
    let cap = recipe.step_count() / 2;
    (0..cap)
        .map(|_| {
            let step_indices = draw_distinct_sorted(&pool, knobs.n_q, rng);
            let placeholder_pos = rng.gen_range(0..knobs.n_q);
            QuestionPlan { step_indices, placeholder_pos }
        })
        .collect()
}

/// Planning for the odd-image task: 3 in-recipe steps per question; one of
/// the three used steps retires after each question (plus one extra random
/// pool step when `k1 = 1`).
pub fn plan_questions_coherence(
    recipe: &Recipe,
    knobs: &KnobConfig,
    rng: &mut impl Rng,
) -> Vec<Vec<u32>> {
    if recipe.step_count() < knobs.min_steps {
        return Vec::new();
    }
    let used = knobs.n_q - 1;
    let mut pool: Vec<u32> = recipe.image_bearing_steps().iter().map(|&i| i as u32).collect();
    let cap = knobs.question_cap(recipe.step_count());
    let mut plans = Vec::new();
    while plans.len() < cap && pool.len() >= used {
        let step_indices = draw_distinct_sorted(&pool, used, rng);
        let retired = step_indices[rng.gen_range(0..used)];
        pool.retain(|&s| s != retired);
        if knobs.k1 == 1 && !pool.is_empty() {
            let extra = pool[rng.gen_range(0..pool.len())];
            pool.retain(|&s| s != extra);
        }
        plans.push(step_indices);
    }
    plans
}
