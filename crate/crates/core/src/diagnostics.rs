//! Bias diagnostics: per-choice distance features, a from-scratch linear
//! probe, distance-separation reports, question-overlap statistics,
//! distance-heuristic solvers, and the 8-row knob sweep.

mod features;
mod overlap;
mod probe;
mod separation;
mod solvers;
mod sweep;

pub use features::{extract_distance_features, DistanceFeatures};
pub use overlap::{overlap_stats, OverlapStats};
pub use probe::{
    loss_and_grad, probe_accuracy, probe_predict, train_probe, ProbeModel,
    DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_LR,
};
pub use separation::{separation_report, SeparationReport};
pub use solvers::{evaluate_solver, solver_prediction, Solver};
pub use sweep::{generate_task, knob_sweep, render_sweep_text, SweepRow};
