//! COCO instance annotations and per-image category filtering.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{read_file, DatasetError, SampleRecord};
use crate::metrics::{BoundingBox, GroundTruthBox};
use crate::rewards::Task;

pub const DEFAULT_MAX_BOXES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, width, height]`
    pub bbox: [f64; 4],
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CocoAnnotation {
    pub fn bbox_xyxy(&self) -> Result<BoundingBox, DatasetError> {
        let [x, y, w, h] = self.bbox;
        BoundingBox::new(x, y, x + w, y + h)
            .map_err(|e| DatasetError::Coco(format!("annotation {}: {e}", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A COCO `instances_*.json` file. Unknown fields are carried through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotationSet {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// How box counts are grouped when filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterScope {
    /// Count a category's boxes within each image.
    Image,
    /// Count a category's boxes over the whole set.
    Dataset,
}

impl CocoAnnotationSet {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let set: Self =
            serde_json::from_str(text).map_err(|e| DatasetError::Coco(format!("malformed JSON: {e}")))?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::from_json(&read_file(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("COCO set serializes")
    }

    /// Every annotation must reference a known image and category.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let images: HashSet<u64> = self.images.iter().map(|i| i.id).collect();
        let cats: HashSet<u64> = self.categories.iter().map(|c| c.id).collect();
        for a in &self.annotations {
            if !images.contains(&a.image_id) {
                return Err(DatasetError::Coco(format!(
                    "annotation {} references unknown image {}",
                    a.id, a.image_id
                )));
            }
            if !cats.contains(&a.category_id) {
                return Err(DatasetError::Coco(format!(
                    "annotation {} references unknown category {}",
                    a.id, a.category_id
                )));
            }
        }
        Ok(())
    }

    /// One OVD sample per image, id = image id, targets = categories present.
    pub fn to_ovd_samples(&self) -> Result<Vec<SampleRecord>, DatasetError> {
        let names: HashMap<u64, &str> =
            self.categories.iter().map(|c| (c.id, c.name.as_str())).collect();
        let mut per_image: BTreeMap<u64, Vec<GroundTruthBox>> =
            self.images.iter().map(|i| (i.id, Vec::new())).collect();
        for a in &self.annotations {
            let label = names
                .get(&a.category_id)
                .ok_or_else(|| DatasetError::Coco(format!("unknown category {}", a.category_id)))?;
            per_image
                .entry(a.image_id)
                .or_default()
                .push(GroundTruthBox::new(a.bbox_xyxy()?, *label));
        }
        let file_names: HashMap<u64, String> = self
            .images
            .iter()
            .filter_map(|i| Some((i.id, i.extra.get("file_name")?.as_str()?.to_string())))
            .collect();
        Ok(per_image
            .into_iter()
            .map(|(id, gt)| {
                let mut targets: Vec<String> = Vec::new();
                for g in &gt {
                    if !targets.contains(&g.label) {
                        targets.push(g.label.clone());
                    }
                }
                SampleRecord {
                    id: id.to_string(),
                    task: Task::Ovd,
                    query: None,
                    targets: Some(targets),
                    gt_box: None,
                    gt: Some(gt),
                    image: file_names.get(&id).cloned(),
                }
            })
            .collect())
    }
}

/// Removes every annotation of a category that has more than `max_boxes`
/// boxes within its scope. Images, categories and extra fields are kept.
pub fn filter_coco_categories(
    coco: &CocoAnnotationSet,
    max_boxes: usize,
    scope: FilterScope,
) -> CocoAnnotationSet {
    let key = |a: &CocoAnnotation| match scope {
        FilterScope::Image => (Some(a.image_id), a.category_id),
        FilterScope::Dataset => (None, a.category_id),
    };
    let mut counts: HashMap<(Option<u64>, u64), usize> = HashMap::new();
    for a in &coco.annotations {
        *counts.entry(key(a)).or_insert(0) += 1;
    }
    CocoAnnotationSet {
        annotations: coco
            .annotations
            .iter()
            .filter(|a| counts[&key(a)] <= max_boxes)
            .cloned()
            .collect(),
        ..coco.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(per_image: &[(u64, &[(u64, usize)])]) -> CocoAnnotationSet {
        let mut annotations = Vec::new();
        let mut next = 1;
        for (img, cats) in per_image {
            for &(cat, n) in *cats {
                for k in 0..n {
                    annotations.push(CocoAnnotation {
                        id: next,
                        image_id: *img,
                        category_id: cat,
                        bbox: [k as f64, 0.0, 5.0, 5.0],
                        extra: Map::new(),
                    });
                    next += 1;
                }
            }
        }
        CocoAnnotationSet {
            images: per_image
                .iter()
                .map(|(id, _)| CocoImage { id: *id, width: 640, height: 480, extra: Map::new() })
                .collect(),
            annotations,
            categories: vec![
                CocoCategory { id: 1, name: "person".into(), extra: Map::new() },
                CocoCategory { id: 18, name: "dog".into(), extra: Map::new() },
            ],
            extra: Map::new(),
        }
    }

    fn count(set: &CocoAnnotationSet, img: u64, cat: u64) -> usize {
        set.annotations.iter().filter(|a| a.image_id == img && a.category_id == cat).count()
    }

    #[test]
    fn removes_crowded_category_per_image() {
        let set = fixture(&[(7, &[(1, 12), (18, 3)])]);
        let out = filter_coco_categories(&set, 10, FilterScope::Image);
        assert_eq!(count(&out, 7, 1), 0);
        assert_eq!(count(&out, 7, 18), 3);
        assert_eq!(out.images.len(), 1);
    }

    #[test]
    fn boundary_is_strict() {
        let set = fixture(&[(1, &[(1, 10)]), (2, &[(1, 11)])]);
        let out = filter_coco_categories(&set, 10, FilterScope::Image);
        assert_eq!(count(&out, 1, 1), 10);
        assert_eq!(count(&out, 2, 1), 0);
        assert_eq!(out.images.len(), 2);
    }

    #[test]
    fn small_categories_untouched_and_idempotent() {
        let set = fixture(&[(1, &[(1, 4), (18, 10)]), (2, &[(18, 2)])]);
        let out = filter_coco_categories(&set, 10, FilterScope::Image);
        assert_eq!(out, set);
        let crowded = fixture(&[(1, &[(1, 12), (18, 10)])]);
        let once = filter_coco_categories(&crowded, 10, FilterScope::Image);
        assert_eq!(filter_coco_categories(&once, 10, FilterScope::Image), once);
    }

    #[test]
    fn dataset_scope_counts_globally() {
        let set = fixture(&[(1, &[(1, 6)]), (2, &[(1, 6), (18, 1)])]);
        assert_eq!(filter_coco_categories(&set, 10, FilterScope::Image), set);
        let out = filter_coco_categories(&set, 10, FilterScope::Dataset);
        assert_eq!(out.annotations.len(), 1);
    }

    #[test]
    fn json_round_trip_keeps_extra_fields() {
        let text = r#"{"info":{"year":2017},"images":[{"id":1,"width":640,"height":480,"file_name":"a.jpg"}],
            "annotations":[{"id":3,"image_id":1,"category_id":18,"bbox":[1,2,3,4],"area":12,"iscrowd":0}],
            "categories":[{"id":18,"name":"dog","supercategory":"animal"}]}"#;
        let set = CocoAnnotationSet::from_json(text).unwrap();
        assert_eq!(set.annotations[0].extra["area"], 12);
        let back = CocoAnnotationSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
        let samples = set.to_ovd_samples().unwrap();
        assert_eq!(samples[0].gt.as_ref().unwrap()[0].bbox.to_array(), [1., 2., 4., 6.]);
        assert_eq!(samples[0].image.as_deref(), Some("a.jpg"));
    }

    #[test]
    fn unknown_references_rejected() {
        let text = r#"{"images":[{"id":1,"width":1,"height":1}],
            "annotations":[{"id":3,"image_id":2,"category_id":18,"bbox":[1,2,3,4]}],
            "categories":[{"id":18,"name":"dog"}]}"#;
        assert!(CocoAnnotationSet::from_json(text).is_err());
    }
}
