//! Renders detections in the OVD answer format.

use serde::Serialize;

use crate::metrics::LabeledDetection;

/// Think text used by rendered completions.
pub const PLACEHOLDER_THINK: &str = "I check which of the queried objects are present in the image.";

#[derive(Serialize)]
struct Entry<'a> {
    bbox_2d: [f64; 4],
    label: &'a str,
}

/// `<think>..</think><answer>```json [...] ```</answer>`, or a `None`
/// answer when there is nothing to report. Confidences are not rendered.
pub fn render_ovd_completion(dets: &[LabeledDetection]) -> String {
    if dets.is_empty() {
        return format!("<think>{PLACEHOLDER_THINK}</think><answer>None</answer>");
    }
    let entries: Vec<Entry<'_>> = dets
        .iter()
        .map(|d| Entry {
            bbox_2d: d.bbox.to_array(),
            label: &d.label,
        })
        .collect();
    let json = serde_json::to_string(&entries).expect("finite coordinates serialize");
    format!("<think>{PLACEHOLDER_THINK}</think><answer>```json\n{json}\n```</answer>")
}
