//! Answer payload extraction and the binary format rewards.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;

use super::tags::{layout, strictly_ordered, ParseStatus};
use crate::metrics::{BoundingBox, LabeledDetection};

static QUADRUPLE: LazyLock<Regex> = LazyLock::new(|| {
    let num = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?";
    Regex::new(&format!(
        r"\[\s*({num})\s*,\s*({num})\s*,\s*({num})\s*,\s*({num})\s*\]"
    ))
    .expect("quadruple pattern")
});

const FENCE_OPEN: &str = "```json";
const FENCE_CLOSE: &str = "```";
const NONE_ANSWER: &str = "None";

/// Structured view of a completion.
///
/// For REC parses `rec_box` is set only when `status` is `Ok`. For OVD parses
/// with `status` `Ok`, exactly one of `ovd_detections` and `ovd_none_flag`
/// is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCompletion {
    pub think: Option<String>,
    pub answer_raw: Option<String>,
    pub rec_box: Option<BoundingBox>,
    pub ovd_detections: Option<Vec<LabeledDetection>>,
    pub ovd_none_flag: bool,
    pub status: ParseStatus,
}

impl ParsedCompletion {
    fn from_tags(text: &str) -> Self {
        let s = super::extract_tagged_sections(text);
        Self {
            think: s.think,
            answer_raw: s.answer_raw,
            rec_box: None,
            ovd_detections: None,
            ovd_none_flag: false,
            status: s.status,
        }
    }

    /// Detections as scored: empty for a `None` answer or a failed parse.
    pub fn scored_detections(&self) -> &[LabeledDetection] {
        self.ovd_detections.as_deref().unwrap_or(&[])
    }
}

/// First numeric quadruple in `s` as a valid box, with its byte span.
fn first_quadruple(s: &str) -> Option<(Result<BoundingBox, ()>, usize, usize)> {
    let caps = QUADRUPLE.captures(s)?;
    let whole = caps.get(0)?;
    let mut c = [0.0; 4];
    for (i, slot) in c.iter_mut().enumerate() {
        *slot = caps[i + 1].parse::<f64>().ok()?;
    }
    Some((BoundingBox::try_from(c).map_err(|_| ()), whole.start(), whole.end()))
}

/// Interior of the first ```` ```json ... ``` ```` fence.
fn fenced_json(s: &str) -> Option<&str> {
    let o = s.find(FENCE_OPEN)? + FENCE_OPEN.len();
    let c = s[o..].find(FENCE_CLOSE)? + o;
    Some(&s[o..c])
}

/// REC answer parse: the first numeric quadruple of the answer content.
///
/// The answer is read whether or not the think pair is well-formed, so an
/// extractable box still earns accuracy when the format reward is 0.
pub fn parse_rec_answer(text: &str) -> ParsedCompletion {
    let mut p = ParsedCompletion::from_tags(text);
    let Some(answer) = p.answer_raw.as_deref() else {
        p.status = ParseStatus::MissingTags;
        return p;
    };
    match first_quadruple(answer) {
        Some((Ok(b), _, _)) => {
            p.rec_box = Some(b);
            p.status = ParseStatus::Ok;
        }
        _ => p.status = ParseStatus::MalformedPayload,
    }
    p
}

fn detection_from_entry(entry: &Value) -> Option<LabeledDetection> {
    let obj = entry.as_object()?;
    let label = obj.get("label")?.as_str()?;
    let coords = obj.get("bbox_2d")?.as_array()?;
    if coords.len() != 4 {
        return None;
    }
    let mut c = [0.0; 4];
    for (slot, v) in c.iter_mut().zip(coords) {
        *slot = v.as_f64()?;
    }
    let bbox = BoundingBox::try_from(c).ok()?;
    Some(LabeledDetection::unit(bbox, label))
}

/// OVD answer parse: `(bbox_2d, label)` entries of the fenced JSON array,
/// each with confidence 1.
///
/// Invalid entries are dropped one by one. Without a fence the whole answer
/// is tried as JSON.
pub fn parse_ovd_answer(text: &str) -> ParsedCompletion {
    let mut p = ParsedCompletion::from_tags(text);
    let Some(answer) = p.answer_raw.as_deref() else {
        p.status = ParseStatus::MissingTags;
        return p;
    };
    if answer.trim() == NONE_ANSWER {
        p.ovd_none_flag = true;
        p.status = ParseStatus::Ok;
        return p;
    }
    let payload = fenced_json(answer).unwrap_or(answer).trim();
    match serde_json::from_str::<Value>(payload) {
        Ok(Value::Array(entries)) => {
            p.ovd_detections = Some(entries.iter().filter_map(detection_from_entry).collect());
            p.status = ParseStatus::Ok;
        }
        _ => p.status = ParseStatus::MalformedPayload,
    }
    p
}

/// 1 when the completion is `<think>...</think><answer>{...[x1, y1, x2, y2]...}</answer>`.
///
/// The first quadruple of the answer must be a valid box enclosed by braces.
pub fn check_format_rec(text: &str) -> u8 {
    let l = layout(text);
    if !strictly_ordered(text, &l) {
        return 0;
    }
    let a = l.answer.expect("ordered layout has an answer");
    let answer = &text[a.1..a.2];
    match first_quadruple(answer) {
        Some((Ok(_), start, end))
            if answer[..start].contains('{') && answer[end..].contains('}') =>
        {
            1
        }
        _ => 0,
    }
}

/// 1 when the answer holds a non-empty ```` ```json ``` ```` fence or is the
/// literal `None`.
pub fn check_format_ovd(text: &str) -> u8 {
    let l = layout(text);
    if !strictly_ordered(text, &l) {
        return 0;
    }
    let a = l.answer.expect("ordered layout has an answer");
    let answer = &text[a.1..a.2];
    if answer.trim() == NONE_ANSWER {
        return 1;
    }
    match fenced_json(answer) {
        Some(inner) if !inner.trim().is_empty() => 1,
        _ => 0,
    }
}
