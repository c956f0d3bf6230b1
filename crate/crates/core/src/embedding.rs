//! The visual feature space: vector store, exact KNN, neighbor-ring
//! statistics, and radially-constrained (ball / annulus) sampling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Sentinel recipe index for images that belong to no known recipe.
pub(crate) const NO_RECIPE: u32 = u32::MAX;

const MAGIC: &[u8; 4] = b"M3CE";
const VERSION: u32 = 1;

/// Immutable store of image embeddings, kept in a canonical (id-sorted)
/// layout so every scan over candidates is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    recipe_of: Vec<u32>,
    step_of: Vec<u32>,
    recipe_names: Vec<String>,
    recipe_name_index: HashMap<String, u32>,
    index: HashMap<String, usize>,
}

/// Mean and sample standard deviation of a point's K-nearest-neighbor
/// distances; the basis for all radial sampling bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub m_d: f64,
    pub s_d: f64,
    pub k_c: usize,
}

/// Half-open radial band `[r_lo, r_hi)` around a center image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Annulus {
    pub fn new(r_lo: f64, r_hi: f64) -> Result<Self> {
        if !(r_lo >= 0.0 && r_hi > r_lo) {
            return Err(Error::InvalidConfig(format!(
                "annulus requires 0 <= r_lo < r_hi, got [{r_lo}, {r_hi})"
            )));
        }
        Ok(Annulus { r_lo, r_hi })
    }

    /// Permissive constructor used when the lower band degenerates
    /// (`r_hi <= r_lo` is allowed and produces an empty band that the
    /// sampling fallback then widens).
    pub fn degenerate_ok(r_lo: f64, r_hi: f64) -> Self {
        Annulus { r_lo: r_lo.max(0.0), r_hi }
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.r_lo && d < self.r_hi
    }
}

/// Result of one KNN query: neighbors sorted ascending by distance (ties by
/// image id), plus whether fewer than `k` candidates were available.
#[derive(Debug, Clone)]
pub struct KnnResult {
    pub neighbors: Vec<(String, f64)>,
    pub shortfall: bool,
}

/// One constrained draw; `fallback` is set whenever the configured band was
/// empty and the widening/nearest-to-midpoint path produced the sample.
#[derive(Debug, Clone)]
pub struct AnnulusSample {
    pub image_id: String,
    pub distance: f64,
    pub fallback: bool,
    /// Upper bound actually in effect for the draw (> `ann.r_hi` after
    /// widening; equal to it otherwise).
    pub effective_r_hi: f64,
}

/// Euclidean (L2) distance between two raw vectors.
pub fn distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { expected: a.len(), got: b.len() });
    }
    Ok(dist_f32(a, b))
}

#[inline]
pub(crate) fn dist_f32(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = *x as f64 - *y as f64;
        acc += d * d;
    }
    acc.sqrt()
}

#[inline]
pub(crate) fn dist_f32_f64(a: &[f32], q: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(q.iter()) {
        let d = *x as f64 - *y;
        acc += d * d;
    }
    acc.sqrt()
}

impl EmbeddingStore {
    /// Build a store from `(image_id, vector)` pairs. Meta (recipe/step of
    /// each image) starts empty; attach it from a corpus with
    /// [`EmbeddingStore::attach_meta`].
    pub fn from_vectors(dim: usize, entries: Vec<(String, Vec<f32>)>) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        let mut index = HashMap::with_capacity(entries.len());
        for (id, v) in entries {
            if v.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(id));
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::BadEmbeddingFile(format!("duplicate image id {id:?}")));
            }
            ids.push(id);
            data.extend_from_slice(&v);
        }
        let n = ids.len();
        Ok(EmbeddingStore {
            dim,
            ids,
            data,
            recipe_of: vec![NO_RECIPE; n],
            step_of: vec![u32::MAX; n],
            recipe_names: Vec::new(),
            recipe_name_index: HashMap::new(),
            index,
        })
    }

    /// Record, for every image referenced by `corpus`, which recipe and step
    /// it belongs to. Errors if a referenced image has no embedding.
    pub fn attach_meta(&mut self, corpus: &Corpus) -> Result<()> {
        self.recipe_names = corpus.recipes.iter().map(|r| r.recipe_id.clone()).collect();
        self.recipe_name_index = self
            .recipe_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        for (ri, recipe) in corpus.recipes.iter().enumerate() {
            for (si, step) in recipe.steps.iter().enumerate() {
                for id in &step.image_ids {
                    let idx = *self
                        .index
                        .get(id)
                        .ok_or_else(|| Error::MissingEmbedding(id.clone()))?;
                    self.recipe_of[idx] = ri as u32;
                    self.step_of[idx] = si as u32;
                }
            }
        }
        Ok(())
    }

    /// Scale every vector to unit L2 norm (optional preprocessing; zero
    /// vectors are left unchanged).
    pub fn normalize_in_place(&mut self) {
        for i in 0..self.ids.len() {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            let norm = row.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row.iter_mut() {
                    *x = (*x as f64 / norm) as f32;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Image ids in canonical (sorted) order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.vector_at(i))
    }

    /// `(recipe_id, step_index)` for an image, when known.
    pub fn meta(&self, id: &str) -> Option<(&str, u32)> {
        let &i = self.index.get(id)?;
        let r = self.recipe_of[i];
        if r == NO_RECIPE {
            None
        } else {
            Some((self.recipe_names[r as usize].as_str(), self.step_of[i]))
        }
    }

    pub(crate) fn idx_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn id_at(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    #[inline]
    pub(crate) fn vector_at(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn recipe_idx_at(&self, idx: usize) -> u32 {
        self.recipe_of[idx]
    }

    pub(crate) fn recipe_idx_by_name(&self, name: &str) -> Option<u32> {
        self.recipe_name_index.get(name).copied()
    }

    /// Distances from image `center_idx` to every image in the store, in
    /// canonical index order.
    pub(crate) fn distances_from(&self, center_idx: usize) -> Vec<f64> {
        let c = self.vector_at(center_idx);
        (0..self.len()).map(|j| dist_f32(c, self.vector_at(j))).collect()
    }

    /// Distances from an arbitrary point to every image.
    pub(crate) fn distances_from_point(&self, q: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|j| dist_f32_f64(self.vector_at(j), q)).collect()
    }

    /// Component-wise mean of the given images' vectors.
    pub fn mean_embedding(&self, ids: &[&str]) -> Result<Vec<f64>> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("mean_embedding over an empty id list"));
        }
        let mut acc = vec![0.0f64; self.dim];
        for id in ids {
            let v = self
                .vector(id)
                .ok_or_else(|| Error::UnknownImage(id.to_string()))?;
            for (a, x) in acc.iter_mut().zip(v.iter()) {
                *a += *x as f64;
            }
        }
        let n = ids.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
        Ok(acc)
    }

    /// Exact brute-force K nearest neighbors of `center`, excluding `center`
    /// itself and every image belonging to a recipe in `excluded_recipes`.
    /// Sorted ascending by distance; ties broken by image id. If fewer than
    /// `k` candidates exist, all are returned and `shortfall` is set.
    pub fn knn(
        &self,
        center: &str,
        k: usize,
        excluded_recipes: &HashSet<String>,
    ) -> Result<KnnResult> {
        let center_idx = self
            .idx_of(center)
            .ok_or_else(|| Error::UnknownImage(center.to_string()))?;
        let excl: HashSet<u32> = excluded_recipes
            .iter()
            .filter_map(|r| self.recipe_idx_by_name(r))
            .collect();
        let dists = self.distances_from(center_idx);
        let mut cand: Vec<usize> = (0..self.len())
            .filter(|&j| j != center_idx && !excl.contains(&self.recipe_of[j]))
            .collect();
        let shortfall = cand.len() < k;
        cand.sort_by(|&a, &b| {
            dists[a]
                .total_cmp(&dists[b])
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        });
        cand.truncate(k);
        Ok(KnnResult {
            neighbors: cand.into_iter().map(|j| (self.ids[j].clone(), dists[j])).collect(),
            shortfall,
        })
    }

    /// Fast internal variant of `knn` for generation: returns only the ring
    /// distances (k smallest, ties by id) given a precomputed distance array.
    pub(crate) fn ring_distances(
        &self,
        center_idx: usize,
        dists: &[f64],
        k: usize,
        excluded_recipe: u32,
    ) -> (Vec<f64>, bool) {
        let mut cand: Vec<u32> = (0..self.len() as u32)
            .filter(|&j| j as usize != center_idx && self.recipe_of[j as usize] != excluded_recipe)
            .collect();
        let shortfall = cand.len() < k;
        let take = k.min(cand.len());
        if take < cand.len() {
            cand.select_nth_unstable_by(take, |&a, &b| {
                dists[a as usize]
                    .total_cmp(&dists[b as usize])
                    .then_with(|| self.ids[a as usize].cmp(&self.ids[b as usize]))
            });
            cand.truncate(take);
        }
        let mut ring: Vec<f64> = cand.into_iter().map(|j| dists[j as usize]).collect();
        ring.sort_by(f64::total_cmp);
        (ring, shortfall)
    }

    /// Uniform draw among eligible images whose distance from `center` lies
    /// inside `ann`. Eligibility excludes `center`, images of
    /// `excluded_recipes`, and `extra_excluded_ids`.
    ///
    /// Fallback when the band is empty: widen the upper bound by increments
    /// of the band's width, at most 8 times; if still empty, return the
    /// eligible image closest to the band's midpoint. Every fallback is
    /// flagged on the result.
    pub fn sample_in_annulus(
        &self,
        center: &str,
        ann: Annulus,
        excluded_recipes: &HashSet<String>,
        extra_excluded_ids: &HashSet<String>,
        rng: &mut impl Rng,
    ) -> Result<AnnulusSample> {
        let center_idx = self
            .idx_of(center)
            .ok_or_else(|| Error::UnknownImage(center.to_string()))?;
        let excl: HashSet<u32> = excluded_recipes
            .iter()
            .filter_map(|r| self.recipe_idx_by_name(r))
            .collect();
        let dists = self.distances_from(center_idx);
        let eligible: Vec<u32> = (0..self.len() as u32)
            .filter(|&j| {
                let ju = j as usize;
                ju != center_idx
                    && !excl.contains(&self.recipe_of[ju])
                    && !extra_excluded_ids.contains(&self.ids[ju])
            })
            .collect();
        let (idx, dist, fallback, eff_hi) =
            sample_in_annulus_core(&eligible, &dists, ann, center, rng, |a, b| {
                self.ids[a as usize].cmp(&self.ids[b as usize])
            })?;
        Ok(AnnulusSample {
            image_id: self.ids[idx as usize].clone(),
            distance: dist,
            fallback,
            effective_r_hi: eff_hi,
        })
    }

    /// Canonical binary serialization (little-endian) of the store.
    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 4 + self.ids.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for (i, id) in self.ids.iter().enumerate() {
            let b = id.as_bytes();
            out.extend_from_slice(&(b.len() as u16).to_le_bytes());
            out.extend_from_slice(b);
            for x in self.vector_at(i) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, &self.to_binary_bytes())
    }

    /// Parse the binary format.
    pub fn from_binary_bytes(bytes: &[u8]) -> Result<Self> {
        let take = |off: usize, len: usize| -> Result<&[u8]> {
            bytes
                .get(off..off + len)
                .ok_or_else(|| Error::BadEmbeddingFile("truncated file".into()))
        };
        if take(0, 4)? != MAGIC {
            return Err(Error::BadEmbeddingFile("bad magic (expected M3CE)".into()));
        }
        let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::BadEmbeddingFile(format!("unsupported version {version}")));
        }
        let dim = u32::from_le_bytes(take(8, 4)?.try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(take(12, 8)?.try_into().unwrap()) as usize;
        let mut off = 20usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let id_len = u16::from_le_bytes(take(off, 2)?.try_into().unwrap()) as usize;
            off += 2;
            let id = std::str::from_utf8(take(off, id_len)?)
                .map_err(|e| Error::BadEmbeddingFile(format!("non-UTF-8 id: {e}")))?
                .to_string();
            off += id_len;
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                v.push(f32::from_le_bytes(take(off, 4)?.try_into().unwrap()));
                off += 4;
            }
            entries.push((id, v));
        }
        if off != bytes.len() {
            return Err(Error::BadEmbeddingFile("trailing bytes after last record".into()));
        }
        EmbeddingStore::from_vectors(dim, entries)
    }

    /// Load from disk, accepting either the binary format (sniffed by magic)
    /// or the small-fixture JSON form `{"dim": n, "vectors": {id: [..]}}`.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        if bytes.len() >= 4 && &bytes[..4] == MAGIC {
            Self::from_binary_bytes(&bytes)
        } else {
            #[derive(Deserialize)]
            struct JsonStore {
                dim: usize,
                vectors: BTreeMap<String, Vec<f32>>,
            }
            let js: JsonStore = serde_json::from_slice(&bytes)?;
            EmbeddingStore::from_vectors(js.dim, js.vectors.into_iter().collect())
        }
    }

    /// Digest of the canonical binary serialization.
    pub fn sha256(&self) -> String {
        crate::io::sha256_hex(&self.to_binary_bytes())
    }
}

/// The non-empty member set a constrained draw chooses from: the band's
/// members if any, else the band widened by increments of its own width (at
/// most 8 times), else the single eligible image nearest the band midpoint.
/// Returns `(members, fallback_used, effective_r_hi)`.
pub(crate) fn annulus_members_with_fallback(
    eligible: &[u32],
    dists: &[f64],
    ann: Annulus,
    center_label: &str,
    tie: impl Fn(u32, u32) -> std::cmp::Ordering,
) -> Result<(Vec<u32>, bool, f64)> {
    if eligible.is_empty() {
        return Err(Error::NoCandidates { center: center_label.to_string() });
    }
    let width = ann.r_hi - ann.r_lo;
    for widen in 0..=8u32 {
        let r_hi = ann.r_hi + width * widen as f64;
        let members: Vec<u32> = eligible
            .iter()
            .copied()
            .filter(|&j| {
                let d = dists[j as usize];
                d >= ann.r_lo && d < r_hi
            })
            .collect();
        if !members.is_empty() {
            return Ok((members, widen > 0, r_hi));
        }
    }
    // Still empty after widening: deterministic nearest-to-midpoint.
    let mid = (ann.r_lo + ann.r_hi) / 2.0;
    let pick = eligible
        .iter()
        .copied()
        .min_by(|&a, &b| {
            (dists[a as usize] - mid)
                .abs()
                .total_cmp(&(dists[b as usize] - mid).abs())
                .then_with(|| tie(a, b))
        })
        .expect("eligible non-empty");
    Ok((vec![pick], true, ann.r_hi + width * 8.0))
}

/// Draw uniformly from the (fallback-completed) member set.
pub(crate) fn sample_in_annulus_core(
    eligible: &[u32],
    dists: &[f64],
    ann: Annulus,
    center_label: &str,
    rng: &mut impl Rng,
    tie: impl Fn(u32, u32) -> std::cmp::Ordering,
) -> Result<(u32, f64, bool, f64)> {
    let (members, fallback, eff_hi) =
        annulus_members_with_fallback(eligible, dists, ann, center_label, tie)?;
    let pick = members[rng.gen_range(0..members.len())];
    Ok((pick, dists[pick as usize], fallback, eff_hi))
}

/// Ring statistics over a KNN result: mean and sample (n−1) standard
/// deviation of the neighbor distances.
pub fn ring_stats(neighbors: &[(String, f64)]) -> Result<RingStats> {
    ring_stats_from_distances(&neighbors.iter().map(|(_, d)| *d).collect::<Vec<_>>())
}

pub fn ring_stats_from_distances(dists: &[f64]) -> Result<RingStats> {
    let n = dists.len();
    if n < 2 {
        return Err(Error::RingTooSmall(n));
    }
    let mean = dists.iter().sum::<f64>() / n as f64;
    let var = dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    Ok(RingStats { m_d: mean, s_d: var.sqrt(), k_c: n })
}
