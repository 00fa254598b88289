//! Factored Bernoulli emission policy over a scene's queried labels.
//!
//! Decisions, in order:
//! 1. one emission per ground-truth instance, probability `sigmoid(emit[label] / T)`;
//! 2. one emission per negative label, `sigmoid((emit[label] - presence_gate) / T)`;
//! 3. one duplication per emitted detection, `sigmoid(duplicate_logit / T)`.
//!
//! Only these discrete decisions enter the log-probability. Box jitter and
//! negative box placement are sampled but carry no likelihood.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::Scene;
use super::SimError;
use crate::completion::{parse_ovd_answer, render_ovd_completion, ParseStatus};
use crate::metrics::{BoundingBox, LabeledDetection};

/// Policy parameters.
///
/// `presence_gate` is subtracted from a label's emission logit when the label
/// is queried but absent; it is the policy's learned ability to tell present
/// from absent categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub emit_logit: BTreeMap<String, f64>,
    pub presence_gate: f64,
    pub duplicate_logit: f64,
    pub jitter_scale: f64,
}

impl PolicyParams {
    pub fn uniform<S: AsRef<str>>(
        vocab: &[S],
        emit_logit: f64,
        presence_gate: f64,
        duplicate_logit: f64,
        jitter_scale: f64,
    ) -> Self {
        Self {
            emit_logit: vocab
                .iter()
                .map(|l| (l.as_ref().to_string(), emit_logit))
                .collect(),
            presence_gate,
            duplicate_logit,
            jitter_scale,
        }
    }

    /// Emission logit of a label; labels missing from the map use 0.
    pub fn logit(&self, label: &str) -> f64 {
        self.emit_logit.get(label).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = self.emit_logit.values().all(|v| v.is_finite())
            && self.presence_gate.is_finite()
            && self.duplicate_logit.is_finite()
            && self.jitter_scale.is_finite();
        if !finite {
            return Err(SimError::InvalidParams("parameters must be finite".into()));
        }
        if self.jitter_scale < 0.0 {
            return Err(SimError::InvalidParams("jitter_scale must be >= 0".into()));
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, grad: &PolicyGradient, scale: f64) {
        for (label, g) in &grad.emit_logit {
            *self.emit_logit.entry(label.clone()).or_insert(0.0) += scale * g;
        }
        self.presence_gate += scale * grad.presence_gate;
        self.duplicate_logit += scale * grad.duplicate_logit;
    }
}

/// Gradient with respect to the learnable entries of [`PolicyParams`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyGradient {
    pub emit_logit: BTreeMap<String, f64>,
    pub presence_gate: f64,
    pub duplicate_logit: f64,
}

impl PolicyGradient {
    pub fn add_scaled(&mut self, other: &PolicyGradient, scale: f64) {
        for (label, g) in &other.emit_logit {
            *self.emit_logit.entry(label.clone()).or_insert(0.0) += scale * g;
        }
        self.presence_gate += scale * other.presence_gate;
        self.duplicate_logit += scale * other.duplicate_logit;
    }

    pub fn norm(&self) -> f64 {
        (self.emit_logit.values().map(|g| g * g).sum::<f64>()
            + self.presence_gate.powi(2)
            + self.duplicate_logit.powi(2))
        .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.presence_gate == 0.0
            && self.duplicate_logit == 0.0
            && self.emit_logit.values().all(|g| *g == 0.0)
    }
}

/// The discrete choices behind one completion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// One entry per ground-truth instance.
    pub positive_emit: Vec<bool>,
    /// One entry per negative label.
    pub negative_emit: Vec<bool>,
    /// One entry per emitted detection, positives first.
    pub duplicate: Vec<bool>,
}

impl DecisionRecord {
    pub fn emitted(&self) -> usize {
        self.positive_emit.iter().chain(&self.negative_emit).filter(|e| **e).count()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln P(decision)` for a Bernoulli with logit `z`.
fn log_bernoulli(taken: bool, z: f64) -> f64 {
    if taken {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// One decision site: a logit and the parameter it depends on.
enum Site<'a> {
    Positive(&'a str),
    Negative(&'a str),
    Duplicate,
}

impl PolicyParams {
    fn site_logit(&self, site: &Site<'_>, temperature: f64) -> f64 {
        let z = match site {
            Site::Positive(l) => self.logit(l),
            Site::Negative(l) => self.logit(l) - self.presence_gate,
            Site::Duplicate => self.duplicate_logit,
        };
        z / temperature
    }
}

fn sites<'a>(scene: &'a Scene, rec: &'a DecisionRecord) -> impl Iterator<Item = (Site<'a>, bool)> {
    let pos = scene
        .gt
        .iter()
        .zip(&rec.positive_emit)
        .map(|(g, &x)| (Site::Positive(g.label.as_str()), x));
    let neg = scene
        .negative_labels
        .iter()
        .zip(&rec.negative_emit)
        .map(|(l, &x)| (Site::Negative(l.as_str()), x));
    let dup = rec.duplicate.iter().map(|&x| (Site::Duplicate, x));
    pos.chain(neg).chain(dup)
}

fn check_shape(scene: &Scene, rec: &DecisionRecord) -> Result<(), SimError> {
    if rec.positive_emit.len() != scene.gt.len()
        || rec.negative_emit.len() != scene.negative_labels.len()
        || rec.duplicate.len() != rec.emitted()
    {
        return Err(SimError::NotAttributable("decision record does not fit the scene".into()));
    }
    Ok(())
}

/// Exact log-probability of a decision record under `params`.
pub fn decision_logprob(
    params: &PolicyParams,
    scene: &Scene,
    rec: &DecisionRecord,
    temperature: f64,
) -> Result<f64, SimError> {
    check_shape(scene, rec)?;
    Ok(sites(scene, rec)
        .map(|(s, x)| log_bernoulli(x, params.site_logit(&s, temperature)))
        .sum())
}

/// Gradient of [`decision_logprob`] with respect to the learnable parameters.
pub fn decision_logprob_gradient(
    params: &PolicyParams,
    scene: &Scene,
    rec: &DecisionRecord,
    temperature: f64,
) -> Result<PolicyGradient, SimError> {
    check_shape(scene, rec)?;
    let mut g = PolicyGradient::default();
    for (site, x) in sites(scene, rec) {
        // d/dz ln Bernoulli(x; sigmoid(z / T)) = (x - p) / T
        let d = (f64::from(u8::from(x)) - sigmoid(params.site_logit(&site, temperature))) / temperature;
        match site {
            Site::Positive(l) => *g.emit_logit.entry(l.to_string()).or_insert(0.0) += d,
            Site::Negative(l) => {
                *g.emit_logit.entry(l.to_string()).or_insert(0.0) += d;
                g.presence_gate -= d;
            }
            Site::Duplicate => g.duplicate_logit += d,
        }
    }
    Ok(g)
}

/// A sampled completion with its decisions and rendered detections.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCompletion {
    pub text: String,
    pub logp: f64,
    pub decisions: DecisionRecord,
    pub detections: Vec<LabeledDetection>,
    /// Rendered detections whose label is a hard negative, duplicates included.
    pub negative_detections: usize,
}

fn jittered<R: Rng + ?Sized>(b: &BoundingBox, j: f64, rng: &mut R) -> BoundingBox {
    if j == 0.0 {
        return *b;
    }
    let mut c = b.to_array();
    for v in &mut c {
        *v += rng.random_range(-j..=j);
    }
    BoundingBox::new(c[0].min(c[2]), c[1].min(c[3]), c[0].max(c[2]), c[1].max(c[3]))
        .expect("finite jittered box")
}

/// Samples one completion for `scene` and renders it in the OVD answer format.
pub fn sample_completion<R: Rng + ?Sized>(
    params: &PolicyParams,
    scene: &Scene,
    temperature: f64,
    rng: &mut R,
) -> SampledCompletion {
    let mut rec = DecisionRecord::default();
    let mut emitted: Vec<LabeledDetection> = Vec::new();
    let mut logp = 0.0;
    let mut decide = |z: f64, rng: &mut R| {
        let x = rng.random_bool(sigmoid(z));
        logp += log_bernoulli(x, z);
        x
    };

    for g in &scene.gt {
        let x = decide(params.site_logit(&Site::Positive(&g.label), temperature), rng);
        rec.positive_emit.push(x);
        if x {
            let b = jittered(&g.bbox, params.jitter_scale, rng);
            emitted.push(LabeledDetection::unit(b, g.label.clone()));
        }
    }
    let mut negative_emitted = 0usize;
    for l in &scene.negative_labels {
        let x = decide(params.site_logit(&Site::Negative(l), temperature), rng);
        rec.negative_emit.push(x);
        if x {
            negative_emitted += 1;
            emitted.push(LabeledDetection::unit(scene.canvas.random_box(rng), l.clone()));
        }
    }
    let dup_z = params.site_logit(&Site::Duplicate, temperature);
    let mut detections = Vec::with_capacity(emitted.len() * 2);
    let mut negative_detections = 0usize;
    let first_negative = emitted.len() - negative_emitted;
    for (i, d) in emitted.into_iter().enumerate() {
        let x = decide(dup_z, rng);
        rec.duplicate.push(x);
        let copies = if x { 2 } else { 1 };
        if i >= first_negative {
            negative_detections += copies;
        }
        for _ in 1..copies {
            detections.push(d.clone());
        }
        detections.push(d);
    }

    SampledCompletion {
        text: render_ovd_completion(&detections),
        logp,
        decisions: rec,
        detections,
        negative_detections,
    }
}

/// Recovers the decision record behind a rendered completion.
///
/// A parsed detection is attributed to the earliest same-label ground-truth
/// instance that it overlaps best among the instances not yet visited.
pub fn attribute_decisions(text: &str, scene: &Scene) -> Result<DecisionRecord, SimError> {
    let parsed = parse_ovd_answer(text);
    if parsed.status != ParseStatus::Ok {
        return Err(SimError::NotAttributable(format!("parse status {:?}", parsed.status)));
    }
    let dets = parsed.scored_detections();
    let mut rec = DecisionRecord::default();
    let mut idx = 0usize;

    let take_duplicate = |idx: &mut usize, rec: &mut DecisionRecord| {
        let dup = *idx < dets.len() && dets[*idx] == dets[*idx - 1];
        if dup {
            *idx += 1;
        }
        rec.duplicate.push(dup);
    };

    for (i, g) in scene.gt.iter().enumerate() {
        let emitted = idx < dets.len() && dets[idx].label == g.label && {
            let d = &dets[idx];
            let mut best = (i, d.bbox.iou(&g.bbox));
            for (j, other) in scene.gt.iter().enumerate().skip(i + 1) {
                if other.label == g.label {
                    let v = d.bbox.iou(&other.bbox);
                    if v > best.1 {
                        best = (j, v);
                    }
                }
            }
            best.0 == i
        };
        rec.positive_emit.push(emitted);
        if emitted {
            idx += 1;
            take_duplicate(&mut idx, &mut rec);
        }
    }
    for l in &scene.negative_labels {
        let emitted = idx < dets.len() && &dets[idx].label == l;
        rec.negative_emit.push(emitted);
        if emitted {
            idx += 1;
            take_duplicate(&mut idx, &mut rec);
        }
    }
    if idx != dets.len() {
        return Err(SimError::NotAttributable(format!(
            "{} of {} detections left unexplained",
            dets.len() - idx,
            dets.len()
        )));
    }
    Ok(rec)
}

/// Log-probability of a rendered completion under `params`.
pub fn completion_logprob(
    params: &PolicyParams,
    text: &str,
    scene: &Scene,
    temperature: f64,
) -> Result<f64, SimError> {
    let rec = attribute_decisions(text, scene)?;
    decision_logprob(params, scene, &rec, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::GroundTruthBox;
    use crate::sim::scene::{sample_scene, Canvas};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> Vec<String> {
        ["cat", "dog", "bird", "car", "chair"].iter().map(|s| s.to_string()).collect()
    }

    fn fixed_scene() -> Scene {
        let b = |c: [f64; 4]| BoundingBox::try_from(c).unwrap();
        Scene {
            canvas: Canvas::default(),
            gt: vec![
                GroundTruthBox::new(b([10., 10., 100., 100.]), "cat"),
                GroundTruthBox::new(b([200., 200., 300., 280.]), "dog"),
            ],
            positive_labels: vec!["cat".into(), "dog".into()],
            negative_labels: vec!["car".into()],
        }
    }

    #[test]
    fn forced_decisions_reproduce_ground_truth() {
        let scene = fixed_scene();
        let mut p = PolicyParams::uniform(&vocab(), 30.0, 60.0, -30.0, 0.0);
        p.emit_logit.insert("car".into(), 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_completion(&p, &scene, 1.0, &mut rng);
        let parsed = parse_ovd_answer(&s.text);
        let got: Vec<_> = parsed.scored_detections().iter().map(|d| (d.label.clone(), d.bbox)).collect();
        let want: Vec<_> = scene.gt.iter().map(|g| (g.label.clone(), g.bbox)).collect();
        assert_eq!(got, want);
        assert!(s.logp <= 0.0 && s.logp > -1e-9);
        assert_eq!(s.negative_detections, 0);
    }

    #[test]
    fn all_negative_logits_render_none() {
        let scene = fixed_scene();
        let p = PolicyParams::uniform(&vocab(), -30.0, 0.0, -30.0, 2.0);
        let s = sample_completion(&p, &scene, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        let parsed = parse_ovd_answer(&s.text);
        assert!(parsed.ovd_none_flag);
        assert!(parsed.scored_detections().is_empty());
    }

    #[test]
    fn half_probability_logprob() {
        // 2 positives + 1 negative, nothing emitted: 3 ln 0.5
        let scene = fixed_scene();
        let p = PolicyParams::uniform(&vocab(), 0.0, 0.0, 0.0, 0.0);
        let text = render_ovd_completion(&[]);
        let lp = completion_logprob(&p, &text, &scene, 1.0).unwrap();
        assert!((lp - 3.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((lp + 2.0794415416798357).abs() < 1e-12);
    }

    #[test]
    fn sampled_and_recomputed_logp_agree() {
        let v = vocab();
        let p = PolicyParams::uniform(&v, 0.3, 0.5, -0.5, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..300 {
            let scene = sample_scene(seed, &v, Canvas::default(), 3).unwrap();
            let s = sample_completion(&p, &scene, 0.9, &mut rng);
            assert!(s.logp <= 0.0 && s.logp.is_finite());
            let rec = attribute_decisions(&s.text, &scene).unwrap();
            assert_eq!(rec, s.decisions);
            let lp = completion_logprob(&p, &s.text, &scene, 0.9).unwrap();
            assert!((lp - s.logp).abs() < 1e-12);
            let other = PolicyParams::uniform(&v, -1.0, 0.0, 0.0, 3.0);
            if s.decisions.positive_emit.len() + s.decisions.negative_emit.len() > 0 {
                assert_ne!(completion_logprob(&other, &s.text, &scene, 0.9).unwrap(), lp);
            }
        }
    }

    #[test]
    fn unattributable_completions_error() {
        let scene = fixed_scene();
        let b = BoundingBox::new(0., 0., 5., 5.).unwrap();
        let stray = render_ovd_completion(&[LabeledDetection::unit(b, "zebra")]);
        assert!(matches!(attribute_decisions(&stray, &scene), Err(SimError::NotAttributable(_))));
        assert!(attribute_decisions("garbage", &scene).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let v = vocab();
        let scene = fixed_scene();
        let p = PolicyParams::uniform(&v, 0.4, -0.3, 0.2, 0.0);
        let rec = DecisionRecord {
            positive_emit: vec![true, false],
            negative_emit: vec![true],
            duplicate: vec![false, true],
        };
        let g = decision_logprob_gradient(&p, &scene, &rec, 0.9).unwrap();
        let h = 1e-6;
        let f = |q: &PolicyParams| decision_logprob(q, &scene, &rec, 0.9).unwrap();
        for label in ["cat", "dog", "car"] {
            let mut a = p.clone();
            *a.emit_logit.get_mut(label).unwrap() += h;
            let mut b = p.clone();
            *b.emit_logit.get_mut(label).unwrap() -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            assert!((fd - g.emit_logit[label]).abs() < 1e-8);
        }
        let mut a = p.clone();
        a.presence_gate += h;
        let mut b = p.clone();
        b.presence_gate -= h;
        assert!(((f(&a) - f(&b)) / (2.0 * h) - g.presence_gate).abs() < 1e-8);
    }
}
