//! Rule-based rewards: REC IoU accuracy, OVD AP/mAP/odLength accuracy and
//! the binary format rewards, combined as a weighted sum.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::completion::{
    check_format_ovd, check_format_rec, parse_ovd_answer, parse_rec_answer, ParseStatus,
};
use crate::metrics::{
    ap50_thresholds, coco_iou_thresholds, map_coco, nms, validate_thresholds, BoundingBox,
    CategoryMode, GroundTruthBox, MetricsError, DEFAULT_NMS_THRESH,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("sample task {sample:?} does not match configured task {config:?}")]
    TaskMismatch { config: Task, sample: Task },
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Rec,
    Ovd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OvdAccuracyKind {
    #[serde(rename = "ap50")]
    Ap50,
    #[serde(rename = "map")]
    MeanAp,
    #[serde(rename = "odlength")]
    OdLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub task: Task,
    pub ovd_accuracy_kind: OvdAccuracyKind,
    pub category_mode: CategoryMode,
    /// Thresholds for the `map` and `odlength` accuracies; `ap50` always uses 0.5.
    pub iou_thresholds: Vec<f64>,
    pub nms_before_scoring: bool,
    pub nms_thresh: f64,
    pub accuracy_weight: f64,
    pub format_weight: f64,
}

impl RewardConfig {
    pub fn rec() -> Self {
        Self {
            task: Task::Rec,
            ..Self::ovd(OvdAccuracyKind::OdLength, CategoryMode::GtOnly)
        }
    }

    pub fn ovd(kind: OvdAccuracyKind, category_mode: CategoryMode) -> Self {
        Self {
            task: Task::Ovd,
            ovd_accuracy_kind: kind,
            category_mode,
            iou_thresholds: coco_iou_thresholds(),
            nms_before_scoring: false,
            nms_thresh: DEFAULT_NMS_THRESH,
            accuracy_weight: 1.0,
            format_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        validate_thresholds(&self.iou_thresholds)?;
        if !(self.accuracy_weight >= 0.0 && self.format_weight >= 0.0) {
            return Err(RewardError::InvalidConfig("weights must be >= 0".into()));
        }
        if !(self.accuracy_weight.is_finite() && self.format_weight.is_finite()) {
            return Err(RewardError::InvalidConfig("weights must be finite".into()));
        }
        if !(self.nms_thresh > 0.0 && self.nms_thresh <= 1.0) {
            return Err(RewardError::InvalidConfig("nms_thresh must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn accuracy_thresholds(&self) -> Vec<f64> {
        match self.ovd_accuracy_kind {
            OvdAccuracyKind::Ap50 => ap50_thresholds(),
            OvdAccuracyKind::MeanAp | OvdAccuracyKind::OdLength => self.iou_thresholds.clone(),
        }
    }
}

/// Ground truth a completion is scored against.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleTarget {
    Rec(BoundingBox),
    Ovd(Vec<GroundTruthBox>),
}

impl SampleTarget {
    pub fn task(&self) -> Task {
        match self {
            SampleTarget::Rec(_) => Task::Rec,
            SampleTarget::Ovd(_) => Task::Ovd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub parse_status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_ap: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardOutcome {
    pub accuracy: f64,
    pub format: u8,
    pub total: f64,
    pub s_ovd: Option<f64>,
    pub l_gt: Option<usize>,
    pub l_pred: Option<usize>,
    pub diagnostics: Diagnostics,
}

/// `min(1, l_gt / l_pred)`, and 1 when nothing was predicted.
pub fn length_penalty(l_gt: usize, l_pred: usize) -> f64 {
    if l_pred == 0 {
        1.0
    } else {
        (l_gt as f64 / l_pred as f64).min(1.0)
    }
}

/// IoU between the ground-truth box and the extracted box; 0 when nothing
/// can be extracted.
pub fn reward_rec_accuracy(completion: &str, gt: &BoundingBox) -> f64 {
    parse_rec_answer(completion)
        .rec_box
        .map_or(0.0, |b| gt.iou(&b))
}

/// Accuracy half of an OVD outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OvdAccuracy {
    pub accuracy: f64,
    pub s_ovd: f64,
    pub l_gt: usize,
    pub l_pred: usize,
    pub parse_status: ParseStatus,
    pub per_class_ap: BTreeMap<String, f64>,
}

/// OVD accuracy reward.
///
/// `l_pred` counts the detections that survived parsing. Under
/// [`OvdAccuracyKind::OdLength`] the mAP is scaled by [`length_penalty`].
pub fn reward_ovd_accuracy(
    completion: &str,
    gts: &[GroundTruthBox],
    cfg: &RewardConfig,
) -> OvdAccuracy {
    let parsed = parse_ovd_answer(completion);
    let dets = parsed.scored_detections();
    let l_pred = dets.len();
    let l_gt = gts.len();
    let s_ovd = length_penalty(l_gt, l_pred);
    if parsed.status != ParseStatus::Ok {
        return OvdAccuracy {
            accuracy: 0.0,
            s_ovd,
            l_gt,
            l_pred,
            parse_status: parsed.status,
            per_class_ap: BTreeMap::new(),
        };
    }
    let thresholds = cfg.accuracy_thresholds();
    let report = if cfg.nms_before_scoring {
        map_coco(&nms(dets, cfg.nms_thresh), gts, &thresholds, cfg.category_mode)
    } else {
        map_coco(dets, gts, &thresholds, cfg.category_mode)
    };
    let accuracy = match cfg.ovd_accuracy_kind {
        OvdAccuracyKind::Ap50 | OvdAccuracyKind::MeanAp => report.map_value,
        OvdAccuracyKind::OdLength => s_ovd * report.map_value,
    };
    OvdAccuracy {
        accuracy,
        s_ovd,
        l_gt,
        l_pred,
        parse_status: parsed.status,
        per_class_ap: report.per_class_ap,
    }
}

/// Accuracy and format rewards of one completion and their weighted sum.
///
/// Accuracy is computed even when the format reward is 0.
pub fn score_completion(
    completion: &str,
    target: &SampleTarget,
    cfg: &RewardConfig,
) -> Result<RewardOutcome, RewardError> {
    if target.task() != cfg.task {
        return Err(RewardError::TaskMismatch {
            config: cfg.task,
            sample: target.task(),
        });
    }
    let outcome = match target {
        SampleTarget::Rec(gt) => {
            let parsed = parse_rec_answer(completion);
            let accuracy = parsed.rec_box.map_or(0.0, |b| gt.iou(&b));
            let format = check_format_rec(completion);
            RewardOutcome {
                accuracy,
                format,
                total: cfg.accuracy_weight * accuracy + cfg.format_weight * f64::from(format),
                s_ovd: None,
                l_gt: None,
                l_pred: None,
                diagnostics: Diagnostics {
                    parse_status: parsed.status,
                    per_class_ap: None,
                },
            }
        }
        SampleTarget::Ovd(gts) => {
            let acc = reward_ovd_accuracy(completion, gts, cfg);
            let format = check_format_ovd(completion);
            RewardOutcome {
                accuracy: acc.accuracy,
                format,
                total: cfg.accuracy_weight * acc.accuracy + cfg.format_weight * f64::from(format),
                s_ovd: Some(acc.s_ovd),
                l_gt: Some(acc.l_gt),
                l_pred: Some(acc.l_pred),
                diagnostics: Diagnostics {
                    parse_status: acc.parse_status,
                    per_class_ap: Some(acc.per_class_ap),
                },
            }
        }
    };
    Ok(outcome)
}

/// Scores every completion of a group; output order follows input order.
pub fn score_group<S: AsRef<str> + Sync>(
    completions: &[S],
    target: &SampleTarget,
    cfg: &RewardConfig,
) -> Result<Vec<RewardOutcome>, RewardError> {
    if target.task() != cfg.task {
        return Err(RewardError::TaskMismatch {
            config: cfg.task,
            sample: target.task(),
        });
    }
    completions
        .par_iter()
        .map(|c| score_completion(c.as_ref(), target, cfg))
        .collect()
}
