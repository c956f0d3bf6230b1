//! Deterministic synthetic corpus + embeddings with recipe-cluster
//! structure, so every test and benchmark runs at desk scale without
//! external data.
//!
//! Geometry: each recipe gets a Gaussian centroid; its step images walk from
//! the centroid toward the origin in equal drift increments (a shared
//! convergence region makes late steps of different recipes genuinely
//! confusable), with isotropic noise around each step point.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Recipe, Step};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Parameters of the synthetic fixture. Everything is determined by `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_recipes: usize,
    /// Inclusive range of steps per recipe.
    pub steps_lo: usize,
    pub steps_hi: usize,
    pub dim: usize,
    /// Std of recipe centroids around the origin.
    pub recipe_spread: f64,
    /// Std of each image around its step point; must stay below
    /// `recipe_spread` to keep recipes visually clustered.
    pub within_spread: f64,
    /// Per-step displacement of the step point along the recipe's
    /// convergence direction.
    pub drift: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_recipes: 500,
            steps_lo: 5,
            steps_hi: 12,
            dim: 64,
            recipe_spread: 1.25,
            within_spread: 1.0,
            drift: 1.0,
            seed: 7,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_recipes == 0 {
            return Err(Error::InvalidConfig("n_recipes must be positive".into()));
        }
        if self.steps_lo < 1 || self.steps_lo > self.steps_hi {
            return Err(Error::InvalidConfig(
                "steps range must satisfy 1 <= lo <= hi".into(),
            ));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if self.recipe_spread <= 0.0 || self.within_spread <= 0.0 || self.drift < 0.0 {
            return Err(Error::InvalidConfig(
                "spreads must be positive and drift nonnegative".into(),
            ));
        }
        if self.within_spread >= self.recipe_spread {
            return Err(Error::InvalidConfig(
                "within_spread must be smaller than recipe_spread".into(),
            ));
        }
        Ok(())
    }
}

/// Build the synthetic corpus and its embedding store.
pub fn generate_synthetic(params: &SynthParams) -> Result<(Corpus, EmbeddingStore)> {
    params.validate()?;
    let mut rng = StreamKey::new(params.seed).stream(&[b"synth"]);
    let mut recipes = Vec::with_capacity(params.n_recipes);
    let mut entries: Vec<(String, Vec<f32>)> = Vec::new();

    for r in 0..params.n_recipes {
        let recipe_id = format!("r{r:04}");
        let centroid: Vec<f64> = (0..params.dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * params.recipe_spread)
            .collect();
        let norm = centroid.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Convergence direction: from the centroid toward the origin.
        let unit: Vec<f64> = if norm > 0.0 {
            centroid.iter().map(|x| -x / norm).collect()
        } else {
            let mut e = vec![0.0; params.dim];
            e[0] = 1.0;
            e
        };
        let n_steps = rng.gen_range(params.steps_lo..=params.steps_hi);
        let mut steps = Vec::with_capacity(n_steps);
        for k in 0..n_steps {
            let image_id = format!("{recipe_id}_s{k:02}");
            let vector: Vec<f32> = (0..params.dim)
                .map(|d| {
                    let noise: f64 = rng.sample(StandardNormal);
                    (centroid[d]
                        + k as f64 * params.drift * unit[d]
                        + noise * params.within_spread) as f32
                })
                .collect();
            entries.push((image_id.clone(), vector));
            steps.push(Step {
                tokens: vec!["synthetic".to_string(), format!("action_{k}")],
                image_ids: vec![image_id],
            });
        }
        recipes.push(Recipe {
            recipe_id: recipe_id.clone(),
            title: format!("synthetic recipe {r}"),
            steps,
        });
    }

    let corpus = Corpus::new(recipes)?;
    let mut store = EmbeddingStore::from_vectors(params.dim, entries)?;
    store.attach_meta(&corpus)?;
    Ok((corpus, store))
}
