//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use r1_reward_lab::{BoundingBox, GroundTruthBox, LabeledDetection};

pub fn bb(c: [f64; 4]) -> BoundingBox {
    BoundingBox::try_from(c).unwrap()
}

/// Plain area arithmetic on raw corners.
pub fn iou_ref(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// AP straight from the definition: rank, match, then for each of the 101
/// recall levels take the best precision among ranks reaching that recall.
pub fn ap_ref(preds: &[([f64; 4], f64)], gts: &[[f64; 4]], thr: f64) -> f64 {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    // insertion sort keeps equal confidences in input order
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && preds[order[j - 1]].1 < preds[order[j]].1 {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut used = vec![false; gts.len()];
    let mut curve = Vec::new();
    let mut tp = 0.0;
    for (rank, &pi) in order.iter().enumerate() {
        let mut best = None;
        let mut best_iou = -1.0;
        for gi in 0..gts.len() {
            let v = iou_ref(preds[pi].0, gts[gi]);
            if !used[gi] && v >= thr && v > best_iou {
                best = Some(gi);
                best_iou = v;
            }
        }
        if let Some(gi) = best {
            used[gi] = true;
            tp += 1.0;
        }
        curve.push((tp / gts.len() as f64, tp / (rank + 1) as f64));
    }
    let mut total = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let best = curve
            .iter()
            .filter(|(rec, _)| *rec >= r)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

/// Per-image mAP over `thresholds`. `full` adds predicted-only classes at AP 0.
pub fn map_ref(preds: &[LabeledDetection], gts: &[GroundTruthBox], thresholds: &[f64], full: bool) -> f64 {
    let mut classes: Vec<String> = gts.iter().map(|g| g.label.clone()).collect();
    if full {
        classes.extend(preds.iter().map(|p| p.label.clone()));
    }
    classes.sort();
    classes.dedup();
    if classes.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for c in &classes {
        let p: Vec<([f64; 4], f64)> = preds
            .iter()
            .filter(|d| &d.label == c)
            .map(|d| (d.bbox.to_array(), d.confidence))
            .collect();
        let g: Vec<[f64; 4]> = gts.iter().filter(|d| &d.label == c).map(|d| d.bbox.to_array()).collect();
        if g.is_empty() {
            continue;
        }
        sum += thresholds.iter().map(|&t| ap_ref(&p, &g, t)).sum::<f64>() / thresholds.len() as f64;
    }
    sum / classes.len() as f64
}

pub const CLASSES: [&str; 4] = ["person", "dog", "cat", "car"];

/// Small random scene: up to 4 classes, up to 4 GTs, up to 6 predictions
/// that are mostly perturbed copies of GT boxes, with confidences drawn
/// from a coarse grid so ties occur.
pub fn random_small_scene(seed: u64) -> (Vec<LabeledDetection>, Vec<GroundTruthBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = rng.random_range(1..=4);
    let n_gt = rng.random_range(0..=4);
    let n_pred = rng.random_range(0..=6);
    let rand_box = |rng: &mut ChaCha8Rng| {
        let x = rng.random_range(0..40) as f64;
        let y = rng.random_range(0..40) as f64;
        let w = rng.random_range(2..20) as f64;
        let h = rng.random_range(2..20) as f64;
        [x, y, x + w, y + h]
    };
    let gts: Vec<GroundTruthBox> = (0..n_gt)
        .map(|_| {
            let label = CLASSES[rng.random_range(0..n_classes)];
            GroundTruthBox::new(bb(rand_box(&mut rng)), label)
        })
        .collect();
    let preds = (0..n_pred)
        .map(|_| {
            let conf = [0.3, 0.5, 0.5, 0.8, 1.0][rng.random_range(0..5)];
            if !gts.is_empty() && rng.random_bool(0.7) {
                let g = &gts[rng.random_range(0..gts.len())];
                let c = g.bbox.to_array();
                let d: Vec<f64> = (0..4).map(|_| rng.random_range(-3..=3) as f64).collect();
                let x1 = c[0] + d[0];
                let y1 = c[1] + d[1];
                let x2 = (c[2] + d[2]).max(x1 + 1.0);
                let y2 = (c[3] + d[3]).max(y1 + 1.0);
                let label = if rng.random_bool(0.85) {
                    g.label.clone()
                } else {
                    CLASSES[rng.random_range(0..4)].to_string()
                };
                LabeledDetection::with_confidence(bb([x1, y1, x2, y2]), label, conf)
            } else {
                let label = CLASSES[rng.random_range(0..n_classes)];
                LabeledDetection::with_confidence(bb(rand_box(&mut rng)), label, conf)
            }
        })
        .collect();
    (preds, gts)
}
