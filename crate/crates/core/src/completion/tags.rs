//! `<think>` / `<answer>` tag extraction.

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Outcome of parsing a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    MissingTags,
    MalformedPayload,
}

/// Byte spans of the first think and answer pairs.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TagLayout {
    /// `(open_start, content_start, content_end, close_end)`
    pub think: Option<(usize, usize, usize, usize)>,
    pub answer: Option<(usize, usize, usize, usize)>,
}

impl TagLayout {
    /// Both pairs exist and the think pair closes before the answer opens.
    pub fn ordered(&self) -> bool {
        matches!((self.think, self.answer), (Some(t), Some(a)) if t.3 <= a.0)
    }
}

fn find_pair(window: &str, open: &str, close: &str) -> Option<(usize, usize, usize, usize)> {
    let o = window.find(open)?;
    let cs = o + open.len();
    let c = window[cs..].find(close)? + cs;
    Some((o, cs, c, c + close.len()))
}

/// Locates the first pair of each tag. Everything past the first
/// `</answer>` is invisible to the search.
pub(crate) fn layout(text: &str) -> TagLayout {
    let window = match text.find(ANSWER_CLOSE) {
        Some(i) => &text[..i + ANSWER_CLOSE.len()],
        None => text,
    };
    TagLayout {
        think: find_pair(window, THINK_OPEN, THINK_CLOSE),
        answer: find_pair(window, ANSWER_OPEN, ANSWER_CLOSE),
    }
}

/// Structural compliance: only whitespace before `<think>` and between
/// `</think>` and `<answer>`.
pub(crate) fn strictly_ordered(text: &str, l: &TagLayout) -> bool {
    match (l.think, l.answer) {
        (Some(t), Some(a)) if t.3 <= a.0 => {
            text[..t.0].trim().is_empty() && text[t.3..a.0].trim().is_empty()
        }
        _ => false,
    }
}

/// Think text, raw answer content, and tag status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSections {
    pub think: Option<String>,
    pub answer_raw: Option<String>,
    pub status: ParseStatus,
}

/// Extracts the contents of the first `<think>` and `<answer>` pairs.
///
/// Status is [`ParseStatus::MissingTags`] when either pair is absent or the
/// pairs overlap or appear out of order; the contents that were found are
/// still returned.
pub fn extract_tagged_sections(text: &str) -> TaggedSections {
    let l = layout(text);
    TaggedSections {
        think: l.think.map(|t| text[t.1..t.2].to_string()),
        answer_raw: l.answer.map(|a| text[a.1..a.2].to_string()),
        status: if l.ordered() {
            ParseStatus::Ok
        } else {
            ParseStatus::MissingTags
        },
    }
}
