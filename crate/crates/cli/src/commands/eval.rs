use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use r1_reward_lab::dataset::{parse_predictions, parse_samples};
use r1_reward_lab::metrics::{
    ap50_thresholds, coco_iou_thresholds, greedy_precision_recall, map_coco, map_coco_pooled, nms,
    GreedyCounts, ImageEval, MapReport,
};
use r1_reward_lab::{CategoryMode, GroundTruthBox, LabeledDetection};

use super::{unit_interval, ModeArg};
use crate::error::CliError;
use crate::output::{read_text, RunManifest, Staged};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Map,
    Ap50,
    Gp,
    Gr,
    NmsAp,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Map => "map",
            Metric::Ap50 => "ap50",
            Metric::Gp => "gp",
            Metric::Gr => "gr",
            Metric::NmsAp => "nms-ap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    /// Average image-level values.
    PerImage,
    /// Pool detections across images.
    Pooled,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction JSONL: `{"id", "detections": [{"bbox_2d", "label", "confidence"?}]}`.
    #[arg(long)]
    preds: PathBuf,
    /// OVD sample JSONL holding the ground truth.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "map,ap50,gp,gr,nms-ap")]
    metrics: Vec<Metric>,
    /// IoU threshold for greedy precision and recall.
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    iou: f64,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    nms_thresh: f64,
    #[arg(long, value_enum, default_value = "per-image")]
    aggregate: Aggregate,
    #[arg(long, value_enum, default_value = "gt-only")]
    category_mode: ModeArg,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EvalConfig {
    metrics: Vec<Metric>,
    iou: f64,
    nms_thresh: f64,
    aggregate: Aggregate,
    category_mode: CategoryMode,
}

#[derive(Serialize)]
struct MetricValue {
    value: f64,
    /// Images that entered the average (per-image aggregation only).
    #[serde(skip_serializing_if = "Option::is_none")]
    images: Option<usize>,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a EvalConfig,
    images: usize,
    metrics: BTreeMap<&'static str, MetricValue>,
}

struct Image {
    preds: Vec<LabeledDetection>,
    gts: Vec<GroundTruthBox>,
}

/// `None` when the image has no class to evaluate.
fn map_value(r: MapReport) -> Option<f64> {
    (!r.evaluated_classes.is_empty()).then_some(r.map_value)
}

fn image_metric(m: Metric, im: &Image, cfg: &EvalConfig) -> Option<f64> {
    let mode = cfg.category_mode;
    match m {
        Metric::Map => map_value(map_coco(&im.preds, &im.gts, &coco_iou_thresholds(), mode)),
        Metric::Ap50 => map_value(map_coco(&im.preds, &im.gts, &ap50_thresholds(), mode)),
        Metric::NmsAp => map_value(map_coco(
            &nms(&im.preds, cfg.nms_thresh),
            &im.gts,
            &coco_iou_thresholds(),
            mode,
        )),
        Metric::Gp => Some(greedy_precision_recall(&im.preds, &im.gts, cfg.iou).0),
        Metric::Gr => Some(greedy_precision_recall(&im.preds, &im.gts, cfg.iou).1),
    }
}

fn pooled_metric(m: Metric, images: &[Image], cfg: &EvalConfig) -> f64 {
    let pooled = |preds: &[Vec<LabeledDetection>], thresholds: &[f64]| {
        let evals: Vec<ImageEval<'_>> = images
            .iter()
            .zip(preds)
            .map(|(im, p)| ImageEval::new(p, &im.gts))
            .collect();
        map_coco_pooled(&evals, thresholds, cfg.category_mode).map_value
    };
    let raw: Vec<Vec<LabeledDetection>> = images.iter().map(|im| im.preds.clone()).collect();
    let counts = || {
        let mut c = GreedyCounts::default();
        for im in images {
            c.add(GreedyCounts::of(&im.preds, &im.gts, cfg.iou));
        }
        c.precision_recall()
    };
    match m {
        Metric::Map => pooled(&raw, &coco_iou_thresholds()),
        Metric::Ap50 => pooled(&raw, &ap50_thresholds()),
        Metric::NmsAp => {
            let suppressed: Vec<_> = images.iter().map(|im| nms(&im.preds, cfg.nms_thresh)).collect();
            pooled(&suppressed, &coco_iou_thresholds())
        }
        Metric::Gp => counts().0,
        Metric::Gr => counts().1,
    }
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let mut metrics = args.metrics.clone();
    metrics.sort();
    metrics.dedup();
    let cfg = EvalConfig {
        metrics,
        iou: args.iou,
        nms_thresh: args.nms_thresh,
        aggregate: args.aggregate,
        category_mode: args.category_mode.into(),
    };

    let (gt_text, gt_bytes) = read_text(&args.gt)?;
    let (pred_text, pred_bytes) = read_text(&args.preds)?;
    let samples =
        parse_samples(&gt_text).map_err(|e| CliError::usage(format!("{}: {e}", args.gt.display())))?;
    let preds = parse_predictions(&pred_text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.preds.display())))?;

    let mut index = HashMap::new();
    let mut images = Vec::with_capacity(samples.len());
    for s in &samples {
        let gts = s
            .gt
            .clone()
            .ok_or_else(|| CliError::usage(format!("sample {:?} has no OVD ground truth", s.id)))?;
        if index.insert(s.id.clone(), images.len()).is_some() {
            return Err(CliError::usage(format!("duplicate sample id {:?}", s.id)));
        }
        images.push(Image { preds: Vec::new(), gts });
    }
    let mut seen = HashMap::new();
    for p in preds {
        let &i = index
            .get(&p.id)
            .ok_or_else(|| CliError::usage(format!("prediction id {:?} has no ground truth", p.id)))?;
        if seen.insert(p.id.clone(), ()).is_some() {
            return Err(CliError::usage(format!("duplicate prediction id {:?}", p.id)));
        }
        images[i].preds = p.detections;
    }

    let mut values = BTreeMap::new();
    for &m in &cfg.metrics {
        let v = match cfg.aggregate {
            Aggregate::PerImage => {
                let per: Vec<f64> = images
                    .par_iter()
                    .filter_map(|im| image_metric(m, im, &cfg))
                    .collect();
                let mean = if per.is_empty() { 0.0 } else { per.iter().sum::<f64>() / per.len() as f64 };
                MetricValue { value: mean, images: Some(per.len()) }
            }
            Aggregate::Pooled => MetricValue { value: pooled_metric(m, &images, &cfg), images: None },
        };
        values.insert(m.name(), v);
    }

    println!("{:<8} {:>10}", "metric", "value");
    for (name, v) in &values {
        println!("{name:<8} {:>10.6}", v.value);
    }

    let report = Report { config: &cfg, images: images.len(), metrics: values };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    let mut manifest = RunManifest::new("eval", &cfg, None)?;
    manifest.input("preds", &args.preds, &pred_bytes);
    manifest.input("gt", &args.gt, &gt_bytes);
    let mut staged = Staged::default();
    staged.add(&args.out, text.into_bytes())?;
    staged.commit(manifest, &args.out)
}
