//! Desk-scale reward-hacking simulator.
//!
//! A factored Bernoulli policy answers OVD prompts over toy scenes and is
//! trained with GRPO. Under an AP reward that ignores labels absent from the
//! ground truth, emitting every queried label is free and output length
//! grows; the odLength penalty removes that loophole.

mod policy;
mod scene;
mod train;

pub use policy::{
    attribute_decisions, completion_logprob, decision_logprob, decision_logprob_gradient,
    sample_completion, DecisionRecord, PolicyGradient, PolicyParams, SampledCompletion,
};
pub use scene::{sample_scene, Canvas, Scene, MAX_NEGATIVES, MIN_VOCAB};
pub use train::{
    batch_objective, batch_objective_gradient, grpo_train_step, run_experiment, sample_batch,
    trace_to_csv, ExperimentConfig, ExperimentResult, GroupSample, PolicyInit, SceneDistribution,
    TraceRow, TRACE_CSV_HEADER,
};

use crate::grpo::GrpoError;
use crate::rewards::RewardError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("vocabulary needs at least 4 labels, got {0}")]
    VocabTooSmall(usize),
    #[error("no labels left to use as hard negatives")]
    NoNegativesAvailable,
    #[error("invalid scene distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),
    #[error("completion cannot be attributed to policy decisions: {0}")]
    NotAttributable(String),
    #[error("training batch must contain at least one scene")]
    EmptyBatch,
    #[error(transparent)]
    Grpo(#[from] GrpoError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}
