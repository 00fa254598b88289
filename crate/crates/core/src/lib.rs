//! Rule-based rewards, detection metrics and GRPO numerics for
//! reinforcement learning on grounding and detection tasks, plus a
//! deterministic toy simulator of detection reward hacking.
//!
//! Modules:
//! - [`completion`]: think/answer parsing, format rewards, prompt templates
//! - [`metrics`]: IoU, greedy matching, NMS, AP and mAP
//! - [`rewards`]: REC and OVD rewards
//! - [`grpo`]: advantage normalization, clipped surrogate, KL estimator
//! - [`sim`]: toy policy and GRPO training loop
//! - [`dataset`]: sample JSONL, COCO filtering, negative sampling

pub mod completion;
pub mod dataset;
pub mod grpo;
pub mod metrics;
pub mod rewards;
pub mod sim;

pub use completion::{ParseStatus, ParsedCompletion, PromptText};
pub use grpo::{CompletionGroup, GrpoConfig};
pub use metrics::{BoundingBox, CategoryMode, GroundTruthBox, LabeledDetection, MapReport};
pub use rewards::{OvdAccuracyKind, RewardConfig, RewardOutcome, SampleTarget, Task};
pub use sim::{PolicyParams, Scene, TraceRow};
