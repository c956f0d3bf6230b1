//! Question-blind heuristic solvers that read only choice geometry. Their
//! accuracy above chance measures how much a dataset leaks its labels.

use crate::diagnostics::features::feature_row;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::question::{Dataset, QuestionRecord, Task};

/// The three distance heuristics, one per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Pick the choice nearest the mean of the visible question images.
    NearestCloze,
    /// Pick the presented image with the largest mean distance to the rest.
    OddOneCoherence,
    /// Pick the candidate sequence with the shortest path length.
    MinPathOrdering,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::NearestCloze => "nearest_cloze",
            Solver::OddOneCoherence => "oddone_coherence",
            Solver::MinPathOrdering => "minpath_ordering",
        }
    }

    pub fn parse(s: &str) -> Result<Solver> {
        match s {
            "nearest_cloze" => Ok(Solver::NearestCloze),
            "oddone_coherence" => Ok(Solver::OddOneCoherence),
            "minpath_ordering" => Ok(Solver::MinPathOrdering),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }

    /// The task this solver applies to.
    pub fn task(&self) -> Task {
        match self {
            Solver::NearestCloze => Task::Cloze,
            Solver::OddOneCoherence => Task::Coherence,
            Solver::MinPathOrdering => Task::Ordering,
        }
    }

    /// The canonical solver for a task.
    pub fn for_task(task: Task) -> Solver {
        match task {
            Task::Cloze => Solver::NearestCloze,
            Task::Coherence => Solver::OddOneCoherence,
            Task::Ordering => Solver::MinPathOrdering,
        }
    }
}

fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v < row[best] {
            best = i;
        }
    }
    best
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// The heuristic's prediction for one record (ties → lowest index).
pub fn solver_prediction(record: &QuestionRecord, store: &EmbeddingStore) -> Result<usize> {
    let row = feature_row(record, store)?;
    Ok(match record.task {
        Task::Cloze | Task::Ordering => argmin(&row),
        Task::Coherence => argmax(&row),
    })
}

/// Fraction of records the heuristic answers correctly.
pub fn evaluate_solver(ds: &Dataset, store: &EmbeddingStore, solver: Solver) -> Result<f64> {
    if ds.task != solver.task() {
        return Err(Error::TaskMismatch {
            dataset: ds.task.name().to_string(),
            expected: solver.task().name().to_string(),
        });
    }
    if ds.records.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for r in &ds.records {
        if solver_prediction(r, store)? == usize::from(r.answer_index) {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.records.len() as f64)
}
