//! Greedy one-to-one matching and the greedy precision/recall built on it.

use super::geometry::{GroundTruthBox, LabeledDetection};

/// Matches predictions to ground truths in prediction input order.
///
/// Each prediction takes the unmatched same-label ground truth with the
/// highest IoU at or above `iou_thresh`, ties going to the lower index.
/// Returns `(pred_index, gt_index)` pairs.
pub fn greedy_match(
    preds: &[LabeledDetection],
    gts: &[GroundTruthBox],
    iou_thresh: f64,
) -> Vec<(usize, usize)> {
    debug_assert!(iou_thresh > 0.0 && iou_thresh <= 1.0);
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::new();
    for (pi, pred) in preds.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[gi] || gt.label != pred.label {
                continue;
            }
            let v = pred.bbox.iou(&gt.bbox);
            if v < iou_thresh {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
            out.push((pi, gi));
        }
    }
    out
}

/// Greedy precision and recall at one IoU threshold.
///
/// Empty-set conventions: no predictions and no ground truths gives `(1, 1)`;
/// no predictions with ground truths gives `(0, 0)`; predictions with no
/// ground truths gives `(0, 1)`.
pub fn greedy_precision_recall(
    preds: &[LabeledDetection],
    gts: &[GroundTruthBox],
    iou_thresh: f64,
) -> (f64, f64) {
    match (preds.is_empty(), gts.is_empty()) {
        (true, true) => (1.0, 1.0),
        (true, false) => (0.0, 0.0),
        (false, true) => (0.0, 1.0),
        (false, false) => {
            let m = greedy_match(preds, gts, iou_thresh).len() as f64;
            (m / preds.len() as f64, m / gts.len() as f64)
        }
    }
}

/// Match counts accumulated over many images for pooled precision/recall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GreedyCounts {
    pub matched: usize,
    pub preds: usize,
    pub gts: usize,
}

impl GreedyCounts {
    pub fn of(preds: &[LabeledDetection], gts: &[GroundTruthBox], iou_thresh: f64) -> Self {
        Self {
            matched: greedy_match(preds, gts, iou_thresh).len(),
            preds: preds.len(),
            gts: gts.len(),
        }
    }

    pub fn add(&mut self, other: GreedyCounts) {
        self.matched += other.matched;
        self.preds += other.preds;
        self.gts += other.gts;
    }

    /// `(GP, GR)` with the same empty-set conventions as [`greedy_precision_recall`].
    pub fn precision_recall(&self) -> (f64, f64) {
        match (self.preds == 0, self.gts == 0) {
            (true, true) => (1.0, 1.0),
            (true, false) => (0.0, 0.0),
            (false, true) => (0.0, 1.0),
            (false, false) => (
                self.matched as f64 / self.preds as f64,
                self.matched as f64 / self.gts as f64,
            ),
        }
    }
}
