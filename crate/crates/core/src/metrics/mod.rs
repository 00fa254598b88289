//! Detection geometry and evaluation: IoU, greedy matching, NMS, AP and mAP.

mod ap;
mod geometry;
mod matching;
mod nms;

pub use ap::{
    ap50_thresholds, average_precision, coco_iou_thresholds, map_coco, map_coco_pooled, nms_ap,
    validate_thresholds, CategoryMode, ImageEval, MapReport, RECALL_POINTS,
};
pub use geometry::{iou, BoundingBox, GroundTruthBox, LabeledDetection};
pub use matching::{greedy_match, greedy_precision_recall, GreedyCounts};
pub use nms::{nms, nms_indices, DEFAULT_NMS_THRESH};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("box has non-finite coordinates: {0:?}")]
    NonFiniteBox([f64; 4]),
    #[error("degenerate box (x2 < x1 or y2 < y1): {0:?}")]
    DegenerateBox([f64; 4]),
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("at least one IoU threshold is required")]
    EmptyThresholds,
}
