//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use r1_reward_lab::completion::render_ovd_completion;
use r1_reward_lab::{BoundingBox, GroundTruthBox, LabeledDetection};

const LABELS: [&str; 8] = ["person", "car", "dog", "cat", "chair", "bottle", "bus", "cup"];

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    let x = rng.random_range(0.0..600.0);
    let y = rng.random_range(0.0..440.0);
    let w = rng.random_range(8.0..120.0);
    let h = rng.random_range(8.0..120.0);
    BoundingBox::new(x, y, x + w, y + h).unwrap()
}

/// `n_gt` ground truths and `n_pred` predictions, about half of them
/// perturbed copies of ground truths, with assorted confidences.
pub fn detection_scene(seed: u64, n_gt: usize, n_pred: usize) -> (Vec<LabeledDetection>, Vec<GroundTruthBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gts: Vec<GroundTruthBox> = (0..n_gt)
        .map(|_| GroundTruthBox::new(random_box(&mut rng), LABELS[rng.random_range(0..LABELS.len())]))
        .collect();
    let preds = (0..n_pred)
        .map(|_| {
            let conf = rng.random_range(0.05..1.0);
            if !gts.is_empty() && rng.random_bool(0.5) {
                let g = &gts[rng.random_range(0..gts.len())];
                let c = g.bbox.to_array();
                let d = rng.random_range(-4.0..4.0);
                let b = BoundingBox::new(c[0] + d, c[1] - d, c[2] + d, c[3] + d).unwrap();
                LabeledDetection::with_confidence(b, g.label.clone(), conf)
            } else {
                LabeledDetection::with_confidence(random_box(&mut rng), LABELS[rng.random_range(0..LABELS.len())], conf)
            }
        })
        .collect();
    (preds, gts)
}

/// A rendered OVD completion holding `n` detections.
pub fn ovd_completion(seed: u64, n: usize) -> String {
    let (preds, _) = detection_scene(seed, 0, n);
    render_ovd_completion(&preds)
}
