use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_file, DatasetError};
use crate::metrics::{BoundingBox, GroundTruthBox, LabeledDetection};
use crate::rewards::{SampleTarget, Task};

/// One training or evaluation sample.
///
/// REC records carry `query` and `gt_box`; OVD records carry `targets` and
/// `gt`, with every ground-truth label listed in `targets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<Vec<GroundTruthBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

impl SampleRecord {
    /// Checks the per-task invariants; `line` is only used for the error.
    pub fn validate(&self, line: usize) -> Result<(), DatasetError> {
        let invalid = |field, message: &str| DatasetError::Invalid {
            line,
            field,
            message: message.to_string(),
        };
        match self.task {
            Task::Rec => {
                match &self.query {
                    None => return Err(invalid("query", "required for rec samples")),
                    Some(q) if q.trim().is_empty() => return Err(invalid("query", "must be non-empty")),
                    _ => {}
                }
                if self.gt_box.is_none() {
                    return Err(invalid("gt_box", "required for rec samples"));
                }
            }
            Task::Ovd => {
                let targets = self
                    .targets
                    .as_ref()
                    .ok_or_else(|| invalid("targets", "required for ovd samples"))?;
                let gt = self
                    .gt
                    .as_ref()
                    .ok_or_else(|| invalid("gt", "required for ovd samples"))?;
                if let Some(g) = gt.iter().find(|g| !targets.contains(&g.label)) {
                    return Err(invalid("gt", &format!("label not in targets: {:?}", g.label)));
                }
            }
        }
        Ok(())
    }

    /// Ground truth to score against.
    pub fn target(&self) -> Option<SampleTarget> {
        match self.task {
            Task::Rec => self.gt_box.map(SampleTarget::Rec),
            Task::Ovd => self.gt.clone().map(SampleTarget::Ovd),
        }
    }

    /// Distinct ground-truth labels in first-appearance order.
    pub fn positive_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in self.gt.iter().flatten() {
            if !out.contains(&g.label) {
                out.push(g.label.clone());
            }
        }
        out
    }
}

/// A group of completions for one sample id, in group order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub id: String,
    pub completions: Vec<String>,
}

/// Detections for one sample id. Confidence defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub detections: Vec<LabeledDetection>,
}

fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|source| DatasetError::Json { line: i + 1, source })
        })
        .collect()
}

pub fn parse_samples(text: &str) -> Result<Vec<SampleRecord>, DatasetError> {
    parse_jsonl::<SampleRecord>(text)?
        .into_iter()
        .map(|(line, r)| r.validate(line).map(|_| r))
        .collect()
}

pub fn load_samples(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    parse_samples(&read_file(path)?)
}

/// One JSON object per line, newline terminated.
pub fn write_samples(records: &[SampleRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("sample records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_completions(text: &str) -> Result<Vec<CompletionRecord>, DatasetError> {
    Ok(parse_jsonl(text)?.into_iter().map(|(_, r)| r).collect())
}

pub fn load_completions(path: &Path) -> Result<Vec<CompletionRecord>, DatasetError> {
    parse_completions(&read_file(path)?)
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, DatasetError> {
    Ok(parse_jsonl(text)?.into_iter().map(|(_, r)| r).collect())
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, DatasetError> {
    parse_predictions(&read_file(path)?)
}
