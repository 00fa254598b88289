//! Completion parsing, format rewards and prompt construction.
//!
//! Parsers never fail on arbitrary text: problems are reported through
//! [`ParseStatus`] and score zero downstream.

mod answer;
mod prompt;
mod render;
mod tags;

pub use answer::{check_format_ovd, check_format_rec, parse_ovd_answer, parse_rec_answer, ParsedCompletion};
pub use prompt::{apply_thinking_wrapper, build_prompt_ovd, build_prompt_rec, PromptText, THINKING_SUFFIX};
pub use render::{render_ovd_completion, PLACEHOLDER_THINK};
pub use tags::{extract_tagged_sections, ParseStatus, TaggedSections};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompletionError {
    #[error("REC query must be non-empty")]
    EmptyQuery,
    #[error("OVD target list must be non-empty")]
    EmptyTargets,
}
