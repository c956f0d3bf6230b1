//! Procedural-document corpus: loading, validation, filtering, statistics.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One step of a procedural document: token list plus zero or more images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub tokens: Vec<String>,
    pub image_ids: Vec<String>,
}

/// A procedural document: ordered steps under a unique id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub recipe_id: String,
    pub title: String,
    pub steps: Vec<Step>,
}

impl Recipe {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Indices of steps that carry at least one image (the only steps
    /// question generators may use).
    pub fn image_bearing_steps(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.image_ids.is_empty())
            .map(|(i, _)| i)
            .collect()
    }
}

/// An immutable collection of recipes with pairwise-distinct ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub recipes: Vec<Recipe>,
}

/// Summary counters over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub recipe_count: usize,
    pub step_count: usize,
    pub image_count: usize,
    pub in_vocab_ratio: f64,
    /// True when the corpus contains zero token occurrences, in which case
    /// `in_vocab_ratio` is reported as 0.
    pub zero_token_denominator: bool,
    /// step-count -> number of recipes with that many steps.
    pub steps_histogram: BTreeMap<usize, usize>,
}

impl Corpus {
    pub fn new(recipes: Vec<Recipe>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &recipes {
            if !seen.insert(r.recipe_id.clone()) {
                return Err(Error::DuplicateRecipe(r.recipe_id.clone()));
            }
            if r.steps.is_empty() {
                return Err(Error::MalformedLine {
                    line: 0,
                    message: format!("recipe {:?} has no steps", r.recipe_id),
                });
            }
            let mut imgs = HashSet::new();
            for s in &r.steps {
                for id in &s.image_ids {
                    if !imgs.insert(id.clone()) {
                        return Err(Error::DuplicateImage {
                            recipe: r.recipe_id.clone(),
                            image: id.clone(),
                        });
                    }
                }
            }
        }
        Ok(Corpus { recipes })
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    /// All image ids referenced anywhere, in corpus order.
    pub fn referenced_image_ids(&self) -> Vec<&str> {
        self.recipes
            .iter()
            .flat_map(|r| r.steps.iter())
            .flat_map(|s| s.image_ids.iter())
            .map(String::as_str)
            .collect()
    }

    /// Serialize to the JSONL interchange format (one recipe per line).
    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for r in &self.recipes {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let bytes = self.to_jsonl()?;
        crate::io::atomic_write(path, &bytes)
    }
}

/// Parse a corpus from JSONL bytes, reporting the line number of any
/// malformed record.
pub fn parse_corpus(reader: impl BufRead) -> Result<Corpus> {
    let mut recipes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(format!("<line {lineno}>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let recipe: Recipe = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        recipes.push(recipe);
    }
    Corpus::new(recipes)
}

/// Load and validate a corpus file (UTF-8 JSONL, one recipe per line).
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_corpus(BufReader::new(file))
}

/// Restrict to recipes with at least `min_steps` steps, preserving order.
pub fn filter_by_min_steps(corpus: &Corpus, min_steps: usize) -> Corpus {
    Corpus {
        recipes: corpus
            .recipes
            .iter()
            .filter(|r| r.step_count() >= min_steps)
            .cloned()
            .collect(),
    }
}

/// Exact corpus counters plus the fraction of token occurrences found in
/// `vocabulary` (multiset counting: every occurrence counts once).
pub fn corpus_stats(corpus: &Corpus, vocabulary: &HashSet<String>) -> CorpusStats {
    let mut step_count = 0usize;
    let mut image_count = 0usize;
    let mut total_tokens = 0usize;
    let mut in_vocab = 0usize;
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &corpus.recipes {
        *hist.entry(r.step_count()).or_insert(0) += 1;
        for s in &r.steps {
            step_count += 1;
            image_count += s.image_ids.len();
            for t in &s.tokens {
                total_tokens += 1;
                if vocabulary.contains(t) {
                    in_vocab += 1;
                }
            }
        }
    }
    let zero = total_tokens == 0;
    CorpusStats {
        recipe_count: corpus.len(),
        step_count,
        image_count,
        in_vocab_ratio: if zero { 0.0 } else { in_vocab as f64 / total_tokens as f64 },
        zero_token_denominator: zero,
        steps_histogram: hist,
    }
}

/// Load a newline-delimited vocabulary file (exact, case-sensitive tokens).
pub fn load_vocabulary(path: &Path) -> Result<HashSet<String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect())
}

/// Write a vocabulary as a newline-delimited word list.
pub fn write_vocabulary(path: &Path, vocab: &[String]) -> Result<()> {
    let mut bytes = Vec::new();
    for w in vocab {
        bytes.write_all(w.as_bytes()).expect("vec write");
        bytes.push(b'\n');
    }
    crate::io::atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn step(tokens: &[&str], images: &[&str]) -> Step {
        Step {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            image_ids: images.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn recipe(id: &str, n_steps: usize) -> Recipe {
        Recipe {
            recipe_id: id.to_string(),
            title: format!("title {id}"),
            steps: (0..n_steps)
                .map(|k| step(&["do", "thing"], &[&format!("{id}_s{k}")]))
                .collect(),
        }
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let c = parse_corpus(Cursor::new(Vec::<u8>::new())).unwrap();
        assert_eq!(c.len(), 0);
    }

    #[test]
    fn two_recipes_round_trip_in_order() {
        let c = Corpus::new(vec![recipe("r1", 5), recipe("r2", 6)]).unwrap();
        let bytes = c.to_jsonl().unwrap();
        let c2 = parse_corpus(Cursor::new(bytes)).unwrap();
        assert_eq!(c, c2);
        assert_eq!(c2.recipes[0].recipe_id, "r1");
        assert_eq!(c2.recipes[1].recipe_id, "r2");
    }

    #[test]
    fn duplicate_recipe_id_reports_the_id() {
        let err = Corpus::new(vec![recipe("r1", 5), recipe("r1", 6)]).unwrap_err();
        match err {
            Error::DuplicateRecipe(id) => assert_eq!(id, "r1"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_image_within_recipe_rejected() {
        let mut r = recipe("r1", 5);
        r.steps[3].image_ids = vec!["r1_s0".to_string()];
        let err = Corpus::new(vec![r]).unwrap_err();
        assert!(matches!(err, Error::DuplicateImage { .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!(
            "{}\nnot json\n",
            serde_json::to_string(&recipe("r1", 5)).unwrap()
        );
        let err = parse_corpus(Cursor::new(text.into_bytes())).unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn filter_keeps_only_long_recipes() {
        let c = Corpus::new(vec![recipe("a", 3), recipe("b", 5), recipe("c", 7)]).unwrap();
        let f = filter_by_min_steps(&c, 5);
        let counts: Vec<usize> = f.recipes.iter().map(|r| r.step_count()).collect();
        assert_eq!(counts, vec![5, 7]);
    }

    #[test]
    fn filter_min_one_is_identity() {
        let c = Corpus::new(vec![recipe("a", 3), recipe("b", 5)]).unwrap();
        assert_eq!(filter_by_min_steps(&c, 1), c);
    }

    #[test]
    fn filter_can_empty_the_corpus() {
        let c = Corpus::new(vec![recipe("a", 3)]).unwrap();
        let f = filter_by_min_steps(&c, 10);
        assert!(f.is_empty());
    }

    #[test]
    fn filter_is_idempotent_and_monotone() {
        let c = Corpus::new((3..9).map(|n| recipe(&format!("r{n}"), n)).collect()).unwrap();
        let once = filter_by_min_steps(&c, 5);
        assert_eq!(filter_by_min_steps(&once, 5), once);
        let stricter = filter_by_min_steps(&c, 7);
        assert!(stricter.len() <= once.len());
        for r in &stricter.recipes {
            assert!(once.recipes.contains(r));
        }
    }

    #[test]
    fn stats_count_token_occurrences() {
        let c = Corpus::new(vec![Recipe {
            recipe_id: "r1".into(),
            title: "t".into(),
            steps: vec![step(&["mix", "the", "flourwater"], &["i1"])],
        }])
        .unwrap();
        let vocab: HashSet<String> =
            ["mix", "the", "flour", "water"].iter().map(|s| s.to_string()).collect();
        let st = corpus_stats(&c, &vocab);
        assert!((st.in_vocab_ratio - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(st.recipe_count, 1);
        assert_eq!(st.step_count, 1);
        assert_eq!(st.image_count, 1);
    }

    #[test]
    fn stats_all_in_vocab_ratio_is_one() {
        let c = Corpus::new(vec![recipe("r1", 5)]).unwrap();
        let vocab: HashSet<String> = ["do", "thing"].iter().map(|s| s.to_string()).collect();
        assert_eq!(corpus_stats(&c, &vocab).in_vocab_ratio, 1.0);
    }

    #[test]
    fn stats_zero_tokens_flagged() {
        let c = Corpus::new(vec![Recipe {
            recipe_id: "r1".into(),
            title: "t".into(),
            steps: vec![step(&[], &["i1"])],
        }])
        .unwrap();
        let st = corpus_stats(&c, &HashSet::from(["x".to_string()]));
        assert_eq!(st.in_vocab_ratio, 0.0);
        assert!(st.zero_token_denominator);
    }

    #[test]
    fn stats_invariant_under_reordering() {
        let a = Corpus::new(vec![recipe("a", 3), recipe("b", 5), recipe("c", 7)]).unwrap();
        let b = Corpus::new(vec![recipe("c", 7), recipe("a", 3), recipe("b", 5)]).unwrap();
        let vocab: HashSet<String> = ["do"].iter().map(|s| s.to_string()).collect();
        let sa = corpus_stats(&a, &vocab);
        let sb = corpus_stats(&b, &vocab);
        assert_eq!(sa.recipe_count, sb.recipe_count);
        assert_eq!(sa.step_count, sb.step_count);
        assert_eq!(sa.image_count, sb.image_count);
        assert_eq!(sa.in_vocab_ratio, sb.in_vocab_ratio);
        assert_eq!(sa.steps_histogram, sb.steps_histogram);
    }
}
