//! Problem templates and the thinking-prompt wrapper.

use serde::{Deserialize, Serialize};

use super::CompletionError;

const REC_TEMPLATE_PREFIX: &str =
    "Please provide the bounding box coordinates of the region this sentence describes: ";

const OVD_TEMPLATE_PREFIX: &str =
    "Please carefully check the image and detect the following objects: ";

const OVD_TEMPLATE_SUFFIX: &str = ". Output each detected target's bbox coordinates in JSON format. \
The format of the bbox coordinates is:\n```json\n\
[{\"bbox_2d\": [x1, y1, x2, y2], \"label\": \"target name\"}, \
{\"bbox_2d\": [x1, y1, x2, y2], \"label\": \"target name\"}]\n```\n\
If there are no such targets in the image, simply respond with None.";

pub const THINKING_SUFFIX: &str =
    " Output the thinking process in <think> </think> and final answer in <answer> </answer> tags.";

/// Prompt text handed to the policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptText(pub String);

impl PromptText {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for PromptText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// REC problem prompt. The query is inserted verbatim.
pub fn build_prompt_rec(query: &str) -> Result<PromptText, CompletionError> {
    if query.trim().is_empty() {
        return Err(CompletionError::EmptyQuery);
    }
    Ok(PromptText(format!("{REC_TEMPLATE_PREFIX}{query}.")))
}

/// OVD problem prompt with the targets joined by `", "`.
pub fn build_prompt_ovd<S: AsRef<str>>(targets: &[S]) -> Result<PromptText, CompletionError> {
    if targets.is_empty() {
        return Err(CompletionError::EmptyTargets);
    }
    let list = targets
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(", ");
    Ok(PromptText(format!(
        "{OVD_TEMPLATE_PREFIX}{list}{OVD_TEMPLATE_SUFFIX}"
    )))
}

/// Appends the think/answer instruction. Not idempotent.
pub fn apply_thinking_wrapper(problem: &PromptText) -> PromptText {
    PromptText(format!("{}{THINKING_SUFFIX}", problem.0))
}
