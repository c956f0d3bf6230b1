//! Generated multiple-choice records, datasets, manifests, and the
//! recipe-stable train/valid split.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{Annulus, RingStats};
use crate::error::{Error, Result};
use crate::knobs::KnobConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Cloze,
    Coherence,
    Ordering,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Cloze => "cloze",
            Task::Coherence => "coherence",
            Task::Ordering => "ordering",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "cloze" => Ok(Task::Cloze),
            "coherence" => Ok(Task::Coherence),
            "ordering" => Ok(Task::Ordering),
            other => Err(Error::InvalidConfig(format!("unknown task {other:?}"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Task-specific question payload and choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuestionBody {
    /// 4 slots in step order; the placeholder slot is `None`. Choices are
    /// image ids, exactly one of which fills the placeholder correctly.
    Cloze {
        slots: Vec<Option<String>>,
        placeholder_pos: u8,
        choices: Vec<String>,
    },
    /// 4 presented images (3 in-recipe + 1 inserted outsider). Choices are
    /// the positions 0..4; the answer is the outsider's position.
    Coherence { image_ids: Vec<String>, choices: Vec<u8> },
    /// Choices are 4 orderings of the same 4 image ids; exactly one lists
    /// them in ascending step order.
    Ordering { choices: Vec<Vec<String>> },
}

/// How a record was produced: knob tuple, radial parameters, and every
/// fallback/adjustment flag needed to audit the generation invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub k1: u8,
    pub k2: u8,
    pub k3: u8,
    /// True for the no-removal / far-negatives contrast mode.
    pub legacy: bool,
    /// Neighbor-ring statistics behind the radial bounds (absent for
    /// ordering records).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ring: Option<RingStats>,
    /// Configured sampling band (before any fallback widening).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub band: Option<Annulus>,
    /// Minimum negative distance enforced in legacy mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<f64>,
    /// Fewer ring neighbors were available than requested.
    pub ring_shortfall: bool,
    /// Post-shuffle choice indices that were produced by a fallback draw.
    pub fallback_choices: Vec<u8>,
    /// The per-question proximity coin came up heads (k3 active).
    pub knob3_applied: bool,
    /// Heads, but the replacement could not be performed; choices untouched.
    pub knob3_failed: bool,
    /// Post-shuffle index of the replacement negative, when one was planted.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub knob3_choice: Option<u8>,
    /// Ordering only: permutation weights were all zero, sampled uniformly.
    pub weights_degenerate: bool,
}

impl Provenance {
    pub fn new(k1: u8, k2: u8, k3: u8) -> Self {
        Provenance {
            k1,
            k2,
            k3,
            legacy: false,
            ring: None,
            band: None,
            tau: None,
            ring_shortfall: false,
            fallback_choices: Vec::new(),
            knob3_applied: false,
            knob3_failed: false,
            knob3_choice: None,
            weights_degenerate: false,
        }
    }

    pub fn has_fallback(&self) -> bool {
        !self.fallback_choices.is_empty()
    }
}

/// One generated multiple-choice item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub task: Task,
    pub recipe_id: String,
    /// Position of this question within its recipe's generation sequence.
    pub ordinal: u32,
    /// All step indices of the source recipe (the textual context).
    pub context_step_indices: Vec<u32>,
    /// The ascending step indices this question draws on.
    pub step_indices: Vec<u32>,
    pub question: QuestionBody,
    pub answer_index: u8,
    pub provenance: Provenance,
}

/// Run metadata: everything needed to reproduce and audit a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: KnobConfig,
    pub legacy: bool,
    pub corpus_sha256: String,
    pub embeddings_sha256: String,
    /// task -> split -> record count.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// task -> number of records containing at least one fallback draw.
    pub fallback_counts: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn new(config: KnobConfig, legacy: bool, digests: &SourceDigests) -> Self {
        Manifest {
            config,
            legacy,
            corpus_sha256: digests.corpus_sha256.clone(),
            embeddings_sha256: digests.embeddings_sha256.clone(),
            counts: BTreeMap::new(),
            fallback_counts: BTreeMap::new(),
        }
    }

    /// Fold another manifest's counts into this one (multi-task runs).
    pub fn merge(&mut self, other: &Manifest) {
        for (task, splits) in &other.counts {
            let e = self.counts.entry(task.clone()).or_default();
            for (split, n) in splits {
                *e.entry(split.clone()).or_insert(0) += n;
            }
        }
        for (task, n) in &other.fallback_counts {
            *self.fallback_counts.entry(task.clone()).or_insert(0) += n;
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        crate::io::atomic_write(path, &bytes)
    }
}

/// Digests of the inputs a dataset was generated from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceDigests {
    pub corpus_sha256: String,
    pub embeddings_sha256: String,
}

impl SourceDigests {
    /// Digest a corpus/store pair via their canonical serializations.
    pub fn compute(
        corpus: &crate::corpus::Corpus,
        store: &crate::embedding::EmbeddingStore,
    ) -> Result<Self> {
        Ok(SourceDigests {
            corpus_sha256: crate::io::sha256_hex(&corpus.to_jsonl()?),
            embeddings_sha256: store.sha256(),
        })
    }
}

/// A generated dataset: records in canonical order plus its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub records: Vec<QuestionRecord>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn new(
        task: Task,
        mut records: Vec<QuestionRecord>,
        config: KnobConfig,
        legacy: bool,
        digests: &SourceDigests,
        split_name: &str,
    ) -> Self {
        // Canonical record order: by recipe id, then generation ordinal.
        records.sort_by(|a, b| {
            a.recipe_id.cmp(&b.recipe_id).then(a.ordinal.cmp(&b.ordinal))
        });
        let mut manifest = Manifest::new(config, legacy, digests);
        manifest
            .counts
            .entry(task.name().to_string())
            .or_default()
            .insert(split_name.to_string(), records.len());
        let fb = records.iter().filter(|r| r.provenance.has_fallback()).count();
        manifest.fallback_counts.insert(task.name().to_string(), fb);
        Dataset { task, records, manifest }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Canonical JSONL serialization (one record per line).
    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, &self.to_jsonl()?)
    }

    pub fn from_jsonl_bytes(task: Task, bytes: &[u8], manifest: Manifest) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let rec: QuestionRecord =
                serde_json::from_slice(line).map_err(|e| Error::MalformedLine {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if rec.task != task {
                return Err(Error::TaskMismatch {
                    dataset: rec.task.name().into(),
                    expected: task.name().into(),
                });
            }
            records.push(rec);
        }
        Ok(Dataset { task, records, manifest })
    }

    /// Load a dataset file; the task is inferred from the first record.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let first = bytes
            .split(|&b| b == b'\n')
            .find(|l| !l.is_empty())
            .ok_or(Error::EmptyInput("dataset file has no records"))?;
        let rec: QuestionRecord = serde_json::from_slice(first)?;
        let task = rec.task;
        let manifest = Manifest::new(KnobConfig::default(), rec.provenance.legacy, &SourceDigests::default());
        Self::from_jsonl_bytes(task, &bytes, manifest)
    }
}

/// Fraction of the hash space assigned to the valid split for a recipe id.
fn recipe_hash_fraction(recipe_id: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(recipe_id.as_bytes());
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().unwrap());
    x as f64 / (u64::MAX as f64 + 1.0)
}

/// True when a recipe belongs to the valid split at the given fraction.
pub fn recipe_in_valid_split(recipe_id: &str, valid_fraction: f64) -> bool {
    recipe_hash_fraction(recipe_id) < valid_fraction
}

/// Split by recipe: every question of a recipe lands in exactly one side,
/// decided by a stable hash of the recipe id, so the same corpus always
/// splits identically.
pub fn split_dataset(ds: &Dataset, valid_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "valid_fraction must lie in (0,1), got {valid_fraction}"
        )));
    }
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for r in &ds.records {
        if recipe_in_valid_split(&r.recipe_id, valid_fraction) {
            valid.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    let digests = SourceDigests {
        corpus_sha256: ds.manifest.corpus_sha256.clone(),
        embeddings_sha256: ds.manifest.embeddings_sha256.clone(),
    };
    let legacy = ds.manifest.legacy;
    Ok((
        Dataset::new(ds.task, train, ds.manifest.config, legacy, &digests, "train"),
        Dataset::new(ds.task, valid, ds.manifest.config, legacy, &digests, "valid"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(recipe: &str, ordinal: u32) -> QuestionRecord {
        QuestionRecord {
            task: Task::Cloze,
            recipe_id: recipe.to_string(),
            ordinal,
            context_step_indices: vec![0, 1, 2, 3, 4],
            step_indices: vec![0, 1, 2, 3],
            question: QuestionBody::Cloze {
                slots: vec![
                    Some("a".into()),
                    None,
                    Some("c".into()),
                    Some("d".into()),
                ],
                placeholder_pos: 1,
                choices: vec!["b".into(), "x".into(), "y".into(), "z".into()],
            },
            answer_index: 0,
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
    fn records_sorted_canonically() {
        let ds = dataset(vec![record("r2", 0), record("r1", 1), record("r1", 0)]);
        let order: Vec<(String, u32)> =
            ds.records.iter().map(|r| (r.recipe_id.clone(), r.ordinal)).collect();
        assert_eq!(
            order,
            vec![("r1".into(), 0), ("r1".into(), 1), ("r2".into(), 0)]
        );
    }

    #[test]
    fn jsonl_round_trip() {
        let ds = dataset(vec![record("r1", 0), record("r2", 0)]);
        let bytes = ds.to_jsonl().unwrap();
        let ds2 =
            Dataset::from_jsonl_bytes(Task::Cloze, &bytes, ds.manifest.clone()).unwrap();
        assert_eq!(ds.records, ds2.records);
    }

    #[test]
    fn split_keeps_recipes_whole() {
        let records: Vec<QuestionRecord> = (0..300)
            .flat_map(|i| {
                let id = format!("recipe_{i:03}");
                vec![record(&id, 0), record(&id, 1)]
            })
            .collect();
        let ds = dataset(records);
        let (train, valid) = split_dataset(&ds, 0.25).unwrap();
        assert_eq!(train.len() + valid.len(), ds.len());
        let train_ids: std::collections::HashSet<_> =
            train.records.iter().map(|r| r.recipe_id.clone()).collect();
        let valid_ids: std::collections::HashSet<_> =
            valid.records.iter().map(|r| r.recipe_id.clone()).collect();
        assert!(train_ids.is_disjoint(&valid_ids));
    }

    #[test]
    fn split_fraction_close_to_target() {
        // 1000 recipe ids, valid_fraction 0.1 -> recipe share 0.1 +/- 0.02.
        let n = 1000;
        let in_valid = (0..n)
            .filter(|i| recipe_in_valid_split(&format!("recipe_{i:04}"), 0.1))
            .count();
        let share = in_valid as f64 / n as f64;
        assert!((share - 0.1).abs() <= 0.02, "valid share {share}");
    }

    #[test]
    fn split_is_deterministic() {
        let ds = dataset((0..50).map(|i| record(&format!("r{i}"), 0)).collect());
        let (t1, v1) = split_dataset(&ds, 0.3).unwrap();
        let (t2, v2) = split_dataset(&ds, 0.3).unwrap();
        assert_eq!(t1.to_jsonl().unwrap(), t2.to_jsonl().unwrap());
        assert_eq!(v1.to_jsonl().unwrap(), v2.to_jsonl().unwrap());
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = dataset(vec![record("r1", 0)]);
        assert!(split_dataset(&ds, 0.0).is_err());
        assert!(split_dataset(&ds, 1.0).is_err());
    }

    #[test]
    fn manifest_merge_accumulates() {
        let d1 = dataset(vec![record("r1", 0)]);
        let mut m = d1.manifest.clone();
        let d2 = dataset(vec![record("r2", 0), record("r3", 0)]);
        m.merge(&d2.manifest);
        assert_eq!(m.counts["cloze"]["all"], 3);
    }
}
