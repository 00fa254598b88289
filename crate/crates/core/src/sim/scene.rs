//! Toy detection scenes with hard negatives.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::metrics::{BoundingBox, GroundTruthBox};

pub const MIN_VOCAB: usize = 4;
pub const MAX_NEGATIVES: usize = 3;

/// Box sides are drawn from this fraction range of the shorter canvas side.
const SIDE_RANGE: (f64, f64) = (0.1, 0.4);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 480.0,
        }
    }
}

impl Canvas {
    pub(crate) fn random_box<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundingBox {
        let short = self.width.min(self.height);
        let (lo, hi) = (SIDE_RANGE.0 * short, SIDE_RANGE.1 * short);
        let w = rng.random_range(lo..hi);
        let h = rng.random_range(lo..hi);
        let x1 = rng.random_range(0.0..self.width - w);
        let y1 = rng.random_range(0.0..self.height - h);
        BoundingBox::new(x1, y1, x1 + w, y1 + h).expect("positive sides")
    }

    /// Smallest side a sampled box can have.
    pub fn min_side(&self) -> f64 {
        SIDE_RANGE.0 * self.width.min(self.height)
    }
}

/// One image: ground-truth objects plus queried labels that are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub canvas: Canvas,
    pub gt: Vec<GroundTruthBox>,
    /// Distinct ground-truth labels in order of first appearance.
    pub positive_labels: Vec<String>,
    pub negative_labels: Vec<String>,
}

impl Scene {
    /// Positives followed by negatives, as queried in the prompt.
    pub fn targets(&self) -> Vec<String> {
        self.positive_labels
            .iter()
            .chain(&self.negative_labels)
            .cloned()
            .collect()
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(
        rng: &mut R,
        vocab: &[String],
        canvas: Canvas,
        max_objects: usize,
    ) -> Result<Scene, SimError> {
        if vocab.len() < MIN_VOCAB {
            return Err(SimError::VocabTooSmall(vocab.len()));
        }
        if max_objects < 1 {
            return Err(SimError::InvalidDistribution("max_objects must be >= 1".into()));
        }
        if !(canvas.width > 0.0 && canvas.height > 0.0) {
            return Err(SimError::InvalidDistribution("canvas must have positive size".into()));
        }

        let n = rng.random_range(1..=max_objects);
        let mut gt = Vec::with_capacity(n);
        let mut positive_labels: Vec<String> = Vec::new();
        for _ in 0..n {
            let label = &vocab[rng.random_range(0..vocab.len())];
            gt.push(GroundTruthBox::new(canvas.random_box(rng), label.clone()));
            if !positive_labels.contains(label) {
                positive_labels.push(label.clone());
            }
        }

        let pool: Vec<&String> = vocab.iter().filter(|l| !positive_labels.contains(l)).collect();
        if pool.is_empty() {
            return Err(SimError::NoNegativesAvailable);
        }
        let k = rng.random_range(1..=MAX_NEGATIVES).min(pool.len());
        let negative_labels = sample_indices(rng, pool.len(), k)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect();

        Ok(Scene {
            canvas,
            gt,
            positive_labels,
            negative_labels,
        })
    }
}

/// Deterministic scene for `seed`: `1..=max_objects` boxes with labels from
/// `vocab` and 1 to 3 hard negatives from the remaining labels.
pub fn sample_scene(
    seed: u64,
    vocab: &[String],
    canvas: Canvas,
    max_objects: usize,
) -> Result<Scene, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Scene::sample_with(&mut rng, vocab, canvas, max_objects)
}
