//! The six subcommand implementations. Every command is a pure function of
//! its input files and flags: inputs are never mutated and all outputs are
//! written atomically.

use std::collections::HashSet;
use std::path::Path;

use serde::Serialize;

use clozekit::diagnostics::{
    evaluate_solver, extract_distance_features, knob_sweep, overlap_stats,
    probe_accuracy, render_sweep_text, train_probe, Solver, DEFAULT_EPOCHS, DEFAULT_L2,
    DEFAULT_LR,
};
use clozekit::generate::generate_legacy_cloze;
use clozekit::io::atomic_write;
use clozekit::{
    corpus_stats, load_corpus, load_vocabulary, split_dataset, Corpus, CorpusStats,
    Dataset, EmbeddingStore, Error, Manifest, Result, SourceDigests, SynthParams, Task,
};

use crate::cli::{
    GenerateArgs, ProbeArgs, SolveArgs, StatsArgs, SweepArgs, SynthArgs,
};
use crate::config::{need, pick, require_file, resolve_out_dir, FileConfig};

/// Tasks selected by a `--task` value (`all` expands to the three tasks).
fn parse_task_selection(value: &str) -> Result<Vec<Task>> {
    if value == "all" {
        Ok(vec![Task::Cloze, Task::Coherence, Task::Ordering])
    } else {
        Ok(vec![Task::parse(value)?])
    }
}

/// Load corpus and embeddings, wiring recipe/step metadata into the store
/// (generation needs it for recipe-level exclusions).
fn load_inputs(corpus_path: &Path, emb_path: &Path) -> Result<(Corpus, EmbeddingStore)> {
    require_file(corpus_path, "corpus")?;
    require_file(emb_path, "embeddings")?;
    let corpus = load_corpus(corpus_path)?;
    let mut store = EmbeddingStore::load(emb_path)?;
    store.attach_meta(&corpus)?;
    Ok((corpus, store))
}

pub fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let corpus_path = need(pick(args.corpus, file.corpus.clone()), "corpus")?;
    let emb_path = need(pick(args.embeddings, file.embeddings.clone()), "embeddings")?;
    let out_dir = resolve_out_dir(args.out_dir, file.out_dir.clone())?;
    let task_sel = pick(args.task, file.task.clone()).unwrap_or_else(|| "all".into());
    let legacy = args.legacy || file.legacy.unwrap_or(false);
    let valid_fraction = pick(args.valid_fraction, file.valid_fraction);
    let knobs = args.knobs.resolve(&file)?;

    let tasks = parse_task_selection(&task_sel)?;
    if legacy && tasks != [Task::Cloze] {
        return Err(Error::InvalidConfig(
            "--legacy applies only to --task cloze".into(),
        ));
    }
    if let Some(f) = valid_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "valid_fraction must lie in (0,1), got {f}"
            )));
        }
    }

    let (corpus, store) = load_inputs(&corpus_path, &emb_path)?;
    let digests = SourceDigests::compute(&corpus, &store)?;

    let mut merged: Option<Manifest> = None;
    for task in tasks {
        let ds = if legacy {
            generate_legacy_cloze(&corpus, &store, &knobs, &digests)?
        } else {
            clozekit::diagnostics::generate_task(task, &corpus, &store, &knobs, &digests)?
        };
        let written = match valid_fraction {
            None => {
                let path = out_dir.join(format!("{task}.jsonl"));
                ds.write_jsonl(&path)?;
                println!("wrote {} ({} records)", path.display(), ds.len());
                vec![ds.manifest.clone()]
            }
            Some(f) => {
                let (train, valid) = split_dataset(&ds, f)?;
                let train_path = out_dir.join(format!("{task}.train.jsonl"));
                let valid_path = out_dir.join(format!("{task}.valid.jsonl"));
                train.write_jsonl(&train_path)?;
                valid.write_jsonl(&valid_path)?;
                println!("wrote {} ({} records)", train_path.display(), train.len());
                println!("wrote {} ({} records)", valid_path.display(), valid.len());
                vec![train.manifest.clone(), valid.manifest.clone()]
            }
        };
        for m in written {
            match merged.as_mut() {
                None => merged = Some(m),
                Some(acc) => acc.merge(&m),
            }
        }
    }

    let manifest_path = out_dir.join("manifest.json");
    merged
        .expect("at least one task generated")
        .write(&manifest_path)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

#[derive(Serialize)]
struct DatasetStats {
    path: String,
    task: String,
    records: usize,
    /// Mean pairwise step-set Jaccard overlap between questions of the same
    /// recipe, averaged over recipes.
    overlap: f64,
}

#[derive(Serialize)]
struct StatsReport {
    corpus: CorpusStats,
    datasets: Vec<DatasetStats>,
}

pub fn cmd_stats(args: StatsArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let corpus_path = need(pick(args.corpus, file.corpus.clone()), "corpus")?;
    require_file(&corpus_path, "corpus")?;
    let corpus = load_corpus(&corpus_path)?;

    let vocab = match pick(args.vocabulary, file.vocabulary.clone()) {
        Some(p) => {
            require_file(&p, "vocabulary")?;
            load_vocabulary(&p)?
        }
        None => HashSet::new(),
    };

    let mut datasets = Vec::new();
    for path in &args.dataset {
        require_file(path, "dataset")?;
        let ds = Dataset::load_jsonl(path)?;
        datasets.push(DatasetStats {
            path: path.display().to_string(),
            task: ds.task.name().to_string(),
            records: ds.len(),
            overlap: overlap_stats(&ds).global_mean,
        });
    }

    let report = StatsReport { corpus: corpus_stats(&corpus, &vocab), datasets };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct ProbeSide {
    path: String,
    task: String,
    records: usize,
    accuracy: f64,
    final_loss: f64,
}

#[derive(Serialize)]
struct ProbeReport {
    dataset: ProbeSide,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<ProbeSide>,
    /// baseline accuracy − dataset accuracy (how much easier the baseline is
    /// for a distance-only probe).
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

fn probe_one(
    path: &Path,
    store: &EmbeddingStore,
    epochs: usize,
    lr: f64,
    l2: f64,
) -> Result<ProbeSide> {
    require_file(path, "dataset")?;
    let ds = Dataset::load_jsonl(path)?;
    let features = extract_distance_features(&ds, store)?;
    let model = train_probe(&features, epochs, lr, l2)?;
    Ok(ProbeSide {
        path: path.display().to_string(),
        task: ds.task.name().to_string(),
        records: ds.len(),
        accuracy: probe_accuracy(&model, &features),
        final_loss: model.final_loss,
    })
}

pub fn cmd_probe(args: ProbeArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let emb_path = need(pick(args.embeddings, file.embeddings.clone()), "embeddings")?;
    require_file(&emb_path, "embeddings")?;
    let store = EmbeddingStore::load(&emb_path)?;
    let epochs = pick(args.epochs, file.epochs).unwrap_or(DEFAULT_EPOCHS);
    let lr = pick(args.learning_rate, file.learning_rate).unwrap_or(DEFAULT_LR);
    let l2 = pick(args.l2, file.l2).unwrap_or(DEFAULT_L2);

    let dataset = probe_one(&args.dataset, &store, epochs, lr, l2)?;
    let baseline = match &args.baseline {
        Some(p) => Some(probe_one(p, &store, epochs, lr, l2)?),
        None => None,
    };
    let gap = baseline.as_ref().map(|b| b.accuracy - dataset.accuracy);
    let report = ProbeReport { dataset, baseline, gap };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct SolveReport {
    path: String,
    task: String,
    solver: String,
    records: usize,
    accuracy: f64,
}

pub fn cmd_solve(args: SolveArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let emb_path = need(pick(args.embeddings, file.embeddings.clone()), "embeddings")?;
    require_file(&emb_path, "embeddings")?;
    require_file(&args.dataset, "dataset")?;
    let store = EmbeddingStore::load(&emb_path)?;
    let ds = Dataset::load_jsonl(&args.dataset)?;

    let solver = match pick(args.solver, file.solver.clone()) {
        Some(name) => Solver::parse(&name)?,
        None => Solver::for_task(ds.task),
    };
    let accuracy = evaluate_solver(&ds, &store, solver)?;
    let report = SolveReport {
        path: args.dataset.display().to_string(),
        task: ds.task.name().to_string(),
        solver: solver.name().to_string(),
        records: ds.len(),
        accuracy,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let corpus_path = need(pick(args.corpus, file.corpus.clone()), "corpus")?;
    let emb_path = need(pick(args.embeddings, file.embeddings.clone()), "embeddings")?;
    let out_dir = resolve_out_dir(args.out_dir, file.out_dir.clone())?;
    let task_sel = pick(args.task, file.task.clone()).unwrap_or_else(|| "all".into());
    let base = args.knobs.resolve(&file)?;

    let (corpus, store) = load_inputs(&corpus_path, &emb_path)?;
    for task in parse_task_selection(&task_sel)? {
        let rows = knob_sweep(&corpus, &store, &base, task)?;
        let path = out_dir.join(format!("{task}_sweep.json"));
        let mut bytes = serde_json::to_vec_pretty(&rows)?;
        bytes.push(b'\n');
        atomic_write(&path, &bytes)?;
        println!("task: {task}");
        print!("{}", render_sweep_text(&rows));
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_synth(args: SynthArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let out_dir = resolve_out_dir(args.out_dir, file.out_dir.clone())?;
    let d = SynthParams::default();
    let params = SynthParams {
        n_recipes: args.n_recipes.unwrap_or(d.n_recipes),
        steps_lo: args.steps_lo.unwrap_or(d.steps_lo),
        steps_hi: args.steps_hi.unwrap_or(d.steps_hi),
        dim: args.dim.unwrap_or(d.dim),
        recipe_spread: args.recipe_spread.unwrap_or(d.recipe_spread),
        within_spread: args.within_spread.unwrap_or(d.within_spread),
        drift: args.drift.unwrap_or(d.drift),
        seed: pick(args.seed, file.seed).unwrap_or(d.seed),
    };
    let (corpus, store) = clozekit::generate_synthetic(&params)?;

    let corpus_path = out_dir.join("corpus.jsonl");
    let emb_path = out_dir.join("embeddings.bin");
    corpus.write_jsonl(&corpus_path)?;
    store.write_binary(&emb_path)?;
    println!(
        "wrote {} ({} recipes)",
        corpus_path.display(),
        corpus.len()
    );
    println!("wrote {} ({} vectors, dim {})", emb_path.display(), store.len(), store.dim());
    Ok(())
}
