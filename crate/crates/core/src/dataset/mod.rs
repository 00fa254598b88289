//! File formats: sample/completion/prediction JSONL, COCO instance
//! annotations, and corpus recipes (category filtering, negative sampling).

mod coco;
mod negatives;
mod records;

pub use coco::{
    filter_coco_categories, CocoAnnotation, CocoAnnotationSet, CocoCategory, CocoImage,
    FilterScope, DEFAULT_MAX_BOXES,
};
pub use negatives::sample_negatives;
pub use records::{
    load_completions, load_predictions, load_samples, parse_completions, parse_predictions,
    parse_samples, write_samples, CompletionRecord, PredictionRecord, SampleRecord,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Invalid {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("COCO annotations: {0}")]
    Coco(String),
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
