//! Axis-aligned boxes and labeled detections.

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Axis-aligned box `[x1, y1, x2, y2]` in pixel units.
///
/// Construction guarantees finite coordinates with `x2 >= x1` and `y2 >= y1`.
/// Serializes as a bare four-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, MetricsError> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(MetricsError::NonFiniteBox([x1, y1, x2, y2]));
        }
        if x2 < x1 || y2 < y1 {
            return Err(MetricsError::DegenerateBox([x1, y1, x2, y2]));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Intersection over union; zero when the union has no area.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = MetricsError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BoundingBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

/// Free-function form of [`BoundingBox::iou`].
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

/// A predicted box with its class label and confidence.
///
/// VLM outputs carry no scores, so parsed detections always have confidence 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDetection {
    #[serde(rename = "bbox_2d")]
    pub bbox: BoundingBox,
    pub label: String,
    #[serde(default = "unit_confidence")]
    pub confidence: f64,
}

fn unit_confidence() -> f64 {
    1.0
}

impl LabeledDetection {
    /// Detection with the fixed unit confidence used for VLM outputs.
    pub fn unit(bbox: BoundingBox, label: impl Into<String>) -> Self {
        Self {
            bbox,
            label: label.into(),
            confidence: 1.0,
        }
    }

    pub fn with_confidence(bbox: BoundingBox, label: impl Into<String>, confidence: f64) -> Self {
        Self {
            bbox,
            label: label.into(),
            confidence,
        }
    }
}

/// One ground-truth object. Labels are case-sensitive exact-match keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    #[serde(rename = "bbox_2d")]
    pub bbox: BoundingBox,
    pub label: String,
}

impl GroundTruthBox {
    pub fn new(bbox: BoundingBox, label: impl Into<String>) -> Self {
        Self {
            bbox,
            label: label.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&bb(0., 0., 10., 10.), &bb(0., 0., 10., 10.)), 1.0);
        assert_eq!(iou(&bb(0., 0., 1., 1.), &bb(2., 2., 3., 3.)), 0.0);
        // inter = 50, union = 150
        let v = iou(&bb(0., 0., 10., 10.), &bb(5., 0., 15., 10.));
        assert!((v - 50.0 / 150.0).abs() < 1e-15);
    }

    #[test]
    fn zero_area_union_is_zero() {
        assert_eq!(iou(&bb(1., 1., 1., 1.), &bb(1., 1., 1., 1.)), 0.0);
    }

    #[test]
    fn rejects_degenerate_and_non_finite() {
        assert!(matches!(
            BoundingBox::new(5., 0., 1., 1.),
            Err(MetricsError::DegenerateBox(_))
        ));
        assert!(matches!(
            BoundingBox::new(0., f64::NAN, 1., 1.),
            Err(MetricsError::NonFiniteBox(_))
        ));
    }

    #[test]
    fn serde_as_array() {
        let b = bb(1., 2., 3.5, 4.);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1.0,2.0,3.5,4.0]");
        let back: BoundingBox = serde_json::from_str("[1,2,3.5,4]").unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BoundingBox>("[3,2,1,4]").is_err());
    }

    #[test]
    fn detection_confidence_defaults_to_one() {
        let d: LabeledDetection =
            serde_json::from_str(r#"{"bbox_2d":[0,0,1,1],"label":"cat"}"#).unwrap();
        assert_eq!(d.confidence, 1.0);
    }
}
