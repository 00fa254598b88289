//! COCO-style interpolated average precision and mAP.
//!
//! AP uses the 101-point recall grid `{0, 0.01, ..., 1}` with the precision
//! envelope `max(precision at recall >= r)`. Predictions are ranked by
//! descending confidence with ties kept in input order, which is the only
//! ordering signal when every detection carries confidence 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::geometry::{GroundTruthBox, LabeledDetection};
use super::nms::nms;
use super::MetricsError;

pub const RECALL_POINTS: usize = 101;

/// Which classes enter the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CategoryMode {
    /// Only labels present in the ground truth are evaluated. Predictions of
    /// any other label are ignored entirely, which is what makes AP rewards
    /// hackable.
    #[serde(rename = "gt-only")]
    GtOnly,
    /// Union of predicted and ground-truth labels; a predicted label with no
    /// ground truth scores AP 0.
    #[serde(rename = "full", alias = "full-vocabulary")]
    FullVocabulary,
}

impl std::fmt::Display for CategoryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CategoryMode::GtOnly => f.write_str("gt-only"),
            CategoryMode::FullVocabulary => f.write_str("full"),
        }
    }
}

/// `[0.5, 0.55, ..., 0.95]`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// `[0.5]`.
pub fn ap50_thresholds() -> Vec<f64> {
    vec![0.5]
}

pub fn validate_thresholds(thresholds: &[f64]) -> Result<(), MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::EmptyThresholds);
    }
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(MetricsError::InvalidThreshold(t));
        }
    }
    Ok(())
}

/// Result of a mAP evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub per_class_ap: BTreeMap<String, f64>,
    pub map_value: f64,
    pub evaluated_classes: Vec<String>,
    pub iou_thresholds: Vec<f64>,
    pub category_mode: CategoryMode,
}

/// Predictions and ground truths of one image.
#[derive(Debug, Clone, Copy)]
pub struct ImageEval<'a> {
    pub preds: &'a [LabeledDetection],
    pub gts: &'a [GroundTruthBox],
}

impl<'a> ImageEval<'a> {
    pub fn new(preds: &'a [LabeledDetection], gts: &'a [GroundTruthBox]) -> Self {
        Self { preds, gts }
    }
}

/// Single-class AP for one image. `None` when there are no ground truths,
/// leaving the exclusion-or-zero choice to the caller.
pub fn average_precision(
    preds: &[LabeledDetection],
    gts: &[GroundTruthBox],
    iou_thresh: f64,
) -> Option<f64> {
    let p: Vec<&LabeledDetection> = preds.iter().collect();
    let g: Vec<&GroundTruthBox> = gts.iter().collect();
    pooled_class_ap(&[(p, g)], iou_thresh)
}

/// Single-class AP with detections pooled over images; matching stays
/// within each image.
fn pooled_class_ap(
    images: &[(Vec<&LabeledDetection>, Vec<&GroundTruthBox>)],
    iou_thresh: f64,
) -> Option<f64> {
    let npos: usize = images.iter().map(|(_, g)| g.len()).sum();
    if npos == 0 {
        return None;
    }

    let mut ranked: Vec<(usize, usize)> = images
        .iter()
        .enumerate()
        .flat_map(|(ii, (p, _))| (0..p.len()).map(move |pi| (ii, pi)))
        .collect();
    ranked.sort_by(|&(ia, pa), &(ib, pb)| {
        images[ib].0[pb]
            .confidence
            .total_cmp(&images[ia].0[pa].confidence)
    });

    let mut taken: Vec<Vec<bool>> = images.iter().map(|(_, g)| vec![false; g.len()]).collect();
    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(ii, pi) in &ranked {
        let pred = images[ii].0[pi];
        let gts = &images[ii].1;
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[ii][gi] {
                continue;
            }
            let v = pred.bbox.iou(&gt.bbox);
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        match best {
            Some((gi, _)) => {
                taken[ii][gi] = true;
                tp += 1;
            }
            None => fp += 1,
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / npos as f64);
    }

    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }

    let sum: f64 = (0..RECALL_POINTS)
        .map(|k| {
            let r = k as f64 / (RECALL_POINTS - 1) as f64;
            let idx = recall.partition_point(|&x| x < r);
            precision.get(idx).copied().unwrap_or(0.0)
        })
        .sum();
    Some(sum / RECALL_POINTS as f64)
}

/// Per-image mAP.
pub fn map_coco(
    preds: &[LabeledDetection],
    gts: &[GroundTruthBox],
    iou_thresholds: &[f64],
    category_mode: CategoryMode,
) -> MapReport {
    map_coco_pooled(&[ImageEval::new(preds, gts)], iou_thresholds, category_mode)
}

/// mAP with detections pooled across images.
///
/// Under [`CategoryMode::GtOnly`] a class is evaluated when it has ground
/// truth in at least one image; its detections in other images then count
/// as false positives, as in the COCO API.
pub fn map_coco_pooled(
    images: &[ImageEval<'_>],
    iou_thresholds: &[f64],
    category_mode: CategoryMode,
) -> MapReport {
    debug_assert!(validate_thresholds(iou_thresholds).is_ok());
    let mut classes: BTreeSet<&str> = images
        .iter()
        .flat_map(|im| im.gts.iter().map(|g| g.label.as_str()))
        .collect();
    if category_mode == CategoryMode::FullVocabulary {
        classes.extend(
            images
                .iter()
                .flat_map(|im| im.preds.iter().map(|p| p.label.as_str())),
        );
    }

    let mut per_class_ap = BTreeMap::new();
    for &class in &classes {
        let split: Vec<(Vec<&LabeledDetection>, Vec<&GroundTruthBox>)> = images
            .iter()
            .map(|im| {
                (
                    im.preds.iter().filter(|p| p.label == class).collect(),
                    im.gts.iter().filter(|g| g.label == class).collect(),
                )
            })
            .collect();
        let ap = iou_thresholds
            .iter()
            // No ground truth at all: only reachable in full mode, where the
            // class is pure false positives.
            .map(|&t| pooled_class_ap(&split, t).unwrap_or(0.0))
            .sum::<f64>()
            / iou_thresholds.len() as f64;
        per_class_ap.insert(class.to_string(), ap);
    }

    let map_value = if per_class_ap.is_empty() {
        0.0
    } else {
        per_class_ap.values().sum::<f64>() / per_class_ap.len() as f64
    };
    MapReport {
        evaluated_classes: per_class_ap.keys().cloned().collect(),
        per_class_ap,
        map_value,
        iou_thresholds: iou_thresholds.to_vec(),
        category_mode,
    }
}

/// mAP after class-wise NMS of the predictions.
pub fn nms_ap(
    preds: &[LabeledDetection],
    gts: &[GroundTruthBox],
    iou_thresholds: &[f64],
    nms_thresh: f64,
    category_mode: CategoryMode,
) -> MapReport {
    map_coco(&nms(preds, nms_thresh), gts, iou_thresholds, category_mode)
}
