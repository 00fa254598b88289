//! Class-wise non-maximum suppression.

use super::geometry::LabeledDetection;

pub const DEFAULT_NMS_THRESH: f64 = 0.5;

/// Indices of the detections that survive class-wise NMS, in input order.
///
/// Within a label, detections are visited by descending confidence (ties in
/// input order) and dropped when their IoU with an already kept detection of
/// the same label exceeds `iou_thresh`.
pub fn nms_indices(dets: &[LabeledDetection], iou_thresh: f64) -> Vec<usize> {
    debug_assert!(iou_thresh > 0.0 && iou_thresh <= 1.0);
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));

    let mut keep = vec![false; dets.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let suppressed = kept.iter().any(|&k| {
            dets[k].label == dets[i].label && dets[k].bbox.iou(&dets[i].bbox) > iou_thresh
        });
        if !suppressed {
            keep[i] = true;
            kept.push(i);
        }
    }
    (0..dets.len()).filter(|&i| keep[i]).collect()
}

/// Class-wise NMS returning the surviving detections in input order.
pub fn nms(dets: &[LabeledDetection], iou_thresh: f64) -> Vec<LabeledDetection> {
    nms_indices(dets, iou_thresh)
        .into_iter()
        .map(|i| dets[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::BoundingBox;

    fn det(label: &str, c: [f64; 4], conf: f64) -> LabeledDetection {
        LabeledDetection::with_confidence(BoundingBox::try_from(c).unwrap(), label, conf)
    }

    #[test]
    fn identical_boxes_keep_first() {
        let d = [det("a", [0., 0., 10., 10.], 1.0), det("a", [0., 0., 10., 10.], 1.0)];
        assert_eq!(nms_indices(&d, 0.5), vec![0]);
    }

    #[test]
    fn disjoint_boxes_both_kept() {
        let d = [det("a", [0., 0., 1., 1.], 1.0), det("a", [5., 5., 6., 6.], 1.0)];
        assert_eq!(nms(&d, 0.5).len(), 2);
    }

    #[test]
    fn overlap_point_six_suppressed_at_half() {
        // [0,0,10,10] vs [2.5,0,12.5,10]: inter 75, union 125, IoU 0.6
        let a = det("a", [0., 0., 10., 10.], 1.0);
        let b = det("a", [2.5, 0., 12.5, 10.], 1.0);
        assert!((a.bbox.iou(&b.bbox) - 0.6).abs() < 1e-12);
        assert_eq!(nms(&[a, b], 0.5).len(), 1);
    }

    #[test]
    fn different_labels_never_suppress() {
        let d = [det("a", [0., 0., 10., 10.], 1.0), det("b", [0., 0., 10., 10.], 1.0)];
        assert_eq!(nms_indices(&d, 0.5), vec![0, 1]);
    }

    #[test]
    fn higher_confidence_wins_and_order_preserved() {
        let d = [
            det("a", [0., 0., 10., 10.], 0.3),
            det("b", [50., 50., 60., 60.], 0.5),
            det("a", [0., 0., 10., 10.], 0.9),
        ];
        assert_eq!(nms_indices(&d, 0.5), vec![1, 2]);
    }
}
