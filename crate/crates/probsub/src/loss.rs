//! Decomposable training losses and evaluation metrics.

use crate::error::{Error, Result};
use crate::model::Labeling;

/// Loss family. Both variants decompose over vertices, so the augmented
/// max-oracle reduces to plain MAP with shifted unary scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Count of disagreeing vertices (unnormalized, so it stays additive).
    Hamming,
    /// Mean per-class error rate over the classes present in the ground
    /// truth; absent classes are skipped and the mean renormalized.
    PerClassAverage,
}

/// A loss bound to one ground truth, exposing the per-vertex terms δ_k.
#[derive(Debug, Clone)]
pub struct DecomposableLoss {
    y_true: Labeling,
    /// δ charged at vertex k when its predicted label differs from truth.
    vertex_weight: Vec<f64>,
}

impl DecomposableLoss {
    pub fn new(kind: LossKind, y_true: &Labeling, label_count: usize) -> Self {
        let n = y_true.len();
        let vertex_weight = match kind {
            LossKind::Hamming => vec![1.0; n],
            LossKind::PerClassAverage => {
                let mut class_counts = vec![0usize; label_count];
                for y in y_true.iter() {
                    class_counts[y] += 1;
                }
                let present = class_counts.iter().filter(|c| **c > 0).count();
                y_true
                    .iter()
                    .map(|y| 1.0 / (present as f64 * class_counts[y] as f64))
                    .collect()
            }
        };
        DecomposableLoss {
            y_true: y_true.clone(),
            vertex_weight,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.y_true.len()
    }

    /// δ_k(y_true, label).
    pub fn delta(&self, k: usize, label: usize) -> f64 {
        if label == self.y_true.get(k) {
            0.0
        } else {
            self.vertex_weight[k]
        }
    }

    /// Σ_k δ_k over a full prediction.
    pub fn total(&self, y_pred: &Labeling) -> Result<f64> {
        if y_pred.len() != self.y_true.len() {
            return Err(Error::InvalidLabeling(format!(
                "prediction has {} entries, truth has {}",
                y_pred.len(),
                self.y_true.len()
            )));
        }
        let mut total = 0.0;
        for k in 0..y_pred.len() {
            total += self.delta(k, y_pred.get(k));
        }
        Ok(total)
    }

    /// Value of the loss when every vertex is labeled wrong.
    pub fn max_total(&self) -> f64 {
        self.vertex_weight.iter().sum()
    }
}

/// Training loss Δ(y_true, y_pred). Hamming is the raw disagreement count;
/// per-class average lies in `[0, 1]`.
pub fn loss(kind: LossKind, y_true: &Labeling, y_pred: &Labeling) -> Result<f64> {
    let label_count = y_true
        .iter()
        .chain(y_pred.iter())
        .max()
        .map_or(2, |m| (m + 1).max(2));
    DecomposableLoss::new(kind, y_true, label_count).total(y_pred)
}

/// Intersection-over-union of one class against the rest. Returns 1.0 when
/// the class is empty in both labelings.
pub fn iou(y_true: &Labeling, y_pred: &Labeling, foreground: usize) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidLabeling(format!(
            "length mismatch: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (t, p) in y_true.iter().zip(y_pred.iter()) {
        match (t == foreground, p == foreground) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fne += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fne == 0 {
        return Ok(1.0);
    }
    Ok(tp as f64 / (tp + fp + fne) as f64)
}

/// Mean of foreground and background IoU for binary labelings.
pub fn voc_score(y_true: &Labeling, y_pred: &Labeling) -> Result<f64> {
    if let Some(bad) = y_true.iter().chain(y_pred.iter()).find(|y| *y > 1) {
        return Err(Error::InvalidLabeling(format!(
            "voc_score is defined for binary labelings; found label {bad}"
        )));
    }
    Ok((iou(y_true, y_pred, 0)? + iou(y_true, y_pred, 1)?) / 2.0)
}
