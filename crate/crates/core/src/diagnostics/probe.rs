//! Linear softmax probe trained from scratch on distance features. If this
//! tiny model reads off the answer, the dataset leaks its labels through
//! choice geometry.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DistanceFeatures;
use crate::error::{Error, Result};

pub const DEFAULT_EPOCHS: usize = 500;
pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_L2: f64 = 1e-4;

/// Multiclass linear classifier: `z_c = w_c · x + b_c`, softmax over `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    /// `weights[class][feature]`, square (`n_a × n_a`) for these features.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub final_loss: f64,
}

fn logits(weights: &[Vec<f64>], bias: &[f64], row: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(bias.iter())
        .map(|(w, b)| w.iter().zip(row.iter()).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Mean cross-entropy + `l2 · Σ w²` (bias unpenalized) and its full
/// analytic gradient. Public so tests can check it against finite
/// differences.
#[allow(clippy::type_complexity)]
pub fn loss_and_grad(
    weights: &[Vec<f64>],
    bias: &[f64],
    rows: &[Vec<f64>],
    labels: &[u8],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n_classes = weights.len();
    let n_feat = weights[0].len();
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![vec![0.0; n_feat]; n_classes];
    let mut gb = vec![0.0; n_classes];
    for (row, &y) in rows.iter().zip(labels.iter()) {
        let p = softmax(&logits(weights, bias, row));
        loss -= p[y as usize].max(f64::MIN_POSITIVE).ln();
        for c in 0..n_classes {
            let dz = p[c] - if c == y as usize { 1.0 } else { 0.0 };
            gb[c] += dz / n;
            for f in 0..n_feat {
                gw[c][f] += dz * row[f] / n;
            }
        }
    }
    loss /= n;
    for c in 0..n_classes {
        for f in 0..n_feat {
            loss += l2 * weights[c][f] * weights[c][f];
            gw[c][f] += 2.0 * l2 * weights[c][f];
        }
    }
    (loss, gw, gb)
}

/// Full-batch gradient descent from zero initialization; deterministic for
/// fixed hyperparameters.
pub fn train_probe(
    features: &DistanceFeatures,
    epochs: usize,
    learning_rate: f64,
    l2: f64,
) -> Result<ProbeModel> {
    if features.rows.is_empty() {
        return Err(Error::EmptyInput("probe training needs at least one row"));
    }
    let n_a = features.n_a;
    if n_a == 0 || features.rows.iter().any(|r| r.len() != n_a) {
        return Err(Error::InvalidConfig("feature rows must share a positive width".into()));
    }
    let mut classes: Vec<u8> = features.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidConfig(
            "probe training needs at least 2 label classes".into(),
        ));
    }
    if let Some(&max) = classes.last() {
        if usize::from(max) >= n_a {
            return Err(Error::InvalidConfig("label outside the choice range".into()));
        }
    }

    let mut weights = vec![vec![0.0f64; n_a]; n_a];
    let mut bias = vec![0.0f64; n_a];
    for _ in 0..epochs {
        let (loss, gw, gb) =
            loss_and_grad(&weights, &bias, &features.rows, &features.labels, l2);
        if !loss.is_finite() {
            return Err(Error::Diverged { lr: learning_rate });
        }
        for c in 0..n_a {
            bias[c] -= learning_rate * gb[c];
            for f in 0..n_a {
                weights[c][f] -= learning_rate * gw[c][f];
            }
        }
    }
    let (final_loss, _, _) =
        loss_and_grad(&weights, &bias, &features.rows, &features.labels, l2);
    if !final_loss.is_finite() {
        return Err(Error::Diverged { lr: learning_rate });
    }
    Ok(ProbeModel { weights, bias, epochs, learning_rate, l2, final_loss })
}

/// Argmax class for one feature row; ties go to the lowest index.
pub fn probe_predict(model: &ProbeModel, row: &[f64]) -> usize {
    let z = logits(&model.weights, &model.bias, row);
    let mut best = 0;
    for (c, v) in z.iter().enumerate().skip(1) {
        if *v > z[best] {
            best = c;
        }
    }
    best
}

/// Fraction of rows whose argmax prediction matches the label.
pub fn probe_accuracy(model: &ProbeModel, features: &DistanceFeatures) -> f64 {
    if features.rows.is_empty() {
        return 0.0;
    }
    let hits = features
        .rows
        .iter()
        .zip(features.labels.iter())
        .filter(|(row, &y)| probe_predict(model, row) == usize::from(y))
        .count();
    hits as f64 / features.rows.len() as f64
}
