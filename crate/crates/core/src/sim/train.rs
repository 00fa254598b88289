//! GRPO training of the toy policy and whole experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{
    decision_logprob, decision_logprob_gradient, sample_completion, DecisionRecord, PolicyGradient,
    PolicyParams,
};
use super::scene::{Canvas, Scene};
use super::SimError;
use crate::grpo::{
    grpo_objective, kl_estimate, normalize_advantages, term_logp_derivative, CompletionGroup,
    GrpoConfig,
};
use crate::metrics::CategoryMode;
use crate::rewards::{score_group, OvdAccuracyKind, RewardConfig, SampleTarget};

/// Per-step training statistics, averaged over every sampled completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub mean_reward: f64,
    pub mean_pred_count: f64,
    pub mean_completion_chars: f64,
    pub mean_negative_emissions: f64,
    pub kl_mean: f64,
}

pub const TRACE_CSV_HEADER: &str =
    "step,mean_reward,mean_pred_count,mean_completion_chars,mean_negative_emissions,kl_mean";

impl TraceRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step,
            self.mean_reward,
            self.mean_pred_count,
            self.mean_completion_chars,
            self.mean_negative_emissions,
            self.kl_mean
        )
    }
}

/// Trace as CSV text: header plus one line per row, newline terminated.
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// One scene's sampled group, frozen for objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub scene: Scene,
    pub decisions: Vec<DecisionRecord>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
}

/// Batch GRPO objective at `params` with samples and rewards held fixed:
/// the sum over groups of the group objective, so the step size of a fixed
/// learning rate grows with the batch.
pub fn batch_objective(
    params: &PolicyParams,
    groups: &[GroupSample],
    cfg: &GrpoConfig,
) -> Result<f64, SimError> {
    let mut total = 0.0;
    for g in groups {
        let logp = g
            .decisions
            .iter()
            .map(|d| decision_logprob(params, &g.scene, d, cfg.temperature))
            .collect::<Result<Vec<_>, _>>()?;
        let mut group = CompletionGroup::new(
            "",
            g.rewards.clone(),
            logp,
            g.logp_old.clone(),
            g.logp_ref.clone(),
        )?;
        group.compute_advantages(cfg.std_floor)?;
        total += grpo_objective(&group, cfg)?.0;
    }
    Ok(total)
}

/// Analytic gradient of [`batch_objective`].
pub fn batch_objective_gradient(
    params: &PolicyParams,
    groups: &[GroupSample],
    cfg: &GrpoConfig,
) -> Result<PolicyGradient, SimError> {
    let mut grad = PolicyGradient::default();
    for g in groups {
        let n = g.decisions.len() as f64;
        for (i, d) in g.decisions.iter().enumerate() {
            let lp = decision_logprob(params, &g.scene, d, cfg.temperature)?;
            let w = term_logp_derivative(
                lp,
                g.logp_old[i],
                g.logp_ref[i],
                g.advantages[i],
                cfg.epsilon,
                cfg.beta,
            );
            if w == 0.0 {
                continue;
            }
            let dlp = decision_logprob_gradient(params, &g.scene, d, cfg.temperature)?;
            grad.add_scaled(&dlp, w / n);
        }
    }
    Ok(grad)
}

struct SceneRollout {
    group: GroupSample,
    rewards: Vec<f64>,
    pred_counts: Vec<usize>,
    chars: Vec<usize>,
    negatives: Vec<usize>,
    kl: Vec<f64>,
}

fn rollout(
    params: &PolicyParams,
    reference: &PolicyParams,
    scene: &Scene,
    cfg: &GrpoConfig,
    reward_cfg: &RewardConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SceneRollout, SimError> {
    let samples: Vec<_> = (0..cfg.group_size)
        .map(|_| sample_completion(params, scene, cfg.temperature, rng))
        .collect();
    let texts: Vec<&str> = samples.iter().map(|s| s.text.as_str()).collect();
    let outcomes = score_group(&texts, &SampleTarget::Ovd(scene.gt.clone()), reward_cfg)?;
    let rewards: Vec<f64> = outcomes.iter().map(|o| o.total).collect();
    let advantages = normalize_advantages(&rewards, cfg.std_floor)?;
    let logp_old: Vec<f64> = samples.iter().map(|s| s.logp).collect();
    let logp_ref = samples
        .iter()
        .map(|s| decision_logprob(reference, scene, &s.decisions, cfg.temperature))
        .collect::<Result<Vec<_>, _>>()?;
    let kl = logp_old
        .iter()
        .zip(&logp_ref)
        .map(|(&lp, &lr)| kl_estimate(lp, lr))
        .collect();
    Ok(SceneRollout {
        rewards: rewards.clone(),
        pred_counts: samples.iter().map(|s| s.detections.len()).collect(),
        chars: samples.iter().map(|s| s.text.chars().count()).collect(),
        negatives: samples.iter().map(|s| s.negative_detections).collect(),
        kl,
        group: GroupSample {
            scene: scene.clone(),
            decisions: samples.into_iter().map(|s| s.decisions).collect(),
            rewards,
            advantages,
            logp_old,
            logp_ref,
        },
    })
}

/// Samples one GRPO batch without updating the policy.
///
/// Scene `i` draws from substream `i` of a generator seeded by `sample_seed`,
/// so results do not depend on how the scenes are scheduled across threads.
pub fn sample_batch(
    params: &PolicyParams,
    reference: &PolicyParams,
    scenes: &[Scene],
    cfg: &GrpoConfig,
    reward_cfg: &RewardConfig,
    sample_seed: u64,
) -> Result<(Vec<GroupSample>, TraceRow), SimError> {
    let rollouts = scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
            rng.set_stream(i as u64);
            rollout(params, reference, scene, cfg, reward_cfg, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let count = rollouts.iter().map(|r| r.rewards.len()).sum::<usize>().max(1) as f64;
    let mean = |f: &dyn Fn(&SceneRollout) -> f64| rollouts.iter().map(f).sum::<f64>() / count;
    let row = TraceRow {
        step: 0,
        mean_reward: mean(&|r| r.rewards.iter().sum()),
        mean_pred_count: mean(&|r| r.pred_counts.iter().sum::<usize>() as f64),
        mean_completion_chars: mean(&|r| r.chars.iter().sum::<usize>() as f64),
        mean_negative_emissions: mean(&|r| r.negatives.iter().sum::<usize>() as f64),
        kl_mean: mean(&|r| r.kl.iter().sum()),
    };
    Ok((rollouts.into_iter().map(|r| r.group).collect(), row))
}

/// One GRPO update with `iterations = 1`: sample a group per scene, score,
/// normalize advantages and take a gradient-ascent step of size
/// `learning_rate` on the batch objective.
///
/// The returned row describes the samples drawn before the update; its
/// `step` is left at 0 for the caller to fill in.
#[allow(clippy::too_many_arguments)]
pub fn grpo_train_step<R: Rng + ?Sized>(
    params: &PolicyParams,
    reference: &PolicyParams,
    scenes: &[Scene],
    cfg: &GrpoConfig,
    reward_cfg: &RewardConfig,
    learning_rate: f64,
    rng: &mut R,
) -> Result<(PolicyParams, TraceRow), SimError> {
    if scenes.is_empty() {
        return Err(SimError::EmptyBatch);
    }
    let (groups, row) = sample_batch(params, reference, scenes, cfg, reward_cfg, rng.next_u64())?;
    let grad = batch_objective_gradient(params, &groups, cfg)?;
    let mut next = params.clone();
    next.add_scaled(&grad, learning_rate);
    Ok((next, row))
}

/// The distribution training scenes are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDistribution {
    pub vocab: Vec<String>,
    pub canvas: Canvas,
    pub max_objects: usize,
    /// Scenes per training step.
    pub batch_size: usize,
}

impl Default for SceneDistribution {
    fn default() -> Self {
        Self {
            vocab: ["person", "car", "dog", "cat", "chair", "bottle"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            canvas: Canvas::default(),
            max_objects: 3,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyInit {
    pub emit_logit: f64,
    pub presence_gate: f64,
    pub duplicate_logit: f64,
    pub jitter_scale: f64,
}

impl Default for PolicyInit {
    fn default() -> Self {
        Self {
            emit_logit: -1.0,
            presence_gate: 0.0,
            duplicate_logit: -2.0,
            jitter_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub steps: usize,
    pub seed: u64,
    pub reward: RewardConfig,
    pub grpo: GrpoConfig,
    pub scenes: SceneDistribution,
    pub learning_rate: f64,
    pub init: PolicyInit,
}

impl ExperimentConfig {
    /// Detection defaults (`beta = 0`) with the given accuracy reward.
    pub fn new(kind: OvdAccuracyKind, category_mode: CategoryMode, steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            reward: RewardConfig::ovd(kind, category_mode),
            grpo: GrpoConfig::ovd(),
            scenes: SceneDistribution::default(),
            learning_rate: 0.1,
            init: PolicyInit::default(),
        }
    }

    pub fn initial_params(&self) -> PolicyParams {
        PolicyParams::uniform(
            &self.scenes.vocab,
            self.init.emit_logit,
            self.init.presence_gate,
            self.init.duplicate_logit,
            self.init.jitter_scale,
        )
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.steps < 1 {
            return Err(SimError::InvalidDistribution("steps must be >= 1".into()));
        }
        if self.scenes.batch_size < 1 {
            return Err(SimError::InvalidDistribution("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(SimError::InvalidDistribution("learning_rate must be > 0".into()));
        }
        self.grpo.validate()?;
        self.reward.validate()?;
        self.initial_params().validate()?;
        if self.init.jitter_scale * 2.0 >= self.scenes.canvas.min_side() {
            return Err(SimError::InvalidParams(
                "jitter_scale must be below half the smallest box side".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trace: Vec<TraceRow>,
    /// Mean ground-truth box count of each step's batch.
    pub mean_gt_count: Vec<f64>,
    pub final_params: PolicyParams,
}

/// Trains from the initial parameters for `steps` steps, the initial
/// parameters doubling as the KL reference. Deterministic in `seed`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    let reference = cfg.initial_params();
    let mut params = reference.clone();
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut mean_gt_count = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let scenes = (0..cfg.scenes.batch_size)
            .map(|_| {
                Scene::sample_with(
                    &mut master,
                    &cfg.scenes.vocab,
                    cfg.scenes.canvas,
                    cfg.scenes.max_objects,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        mean_gt_count.push(
            scenes.iter().map(|s| s.gt.len()).sum::<usize>() as f64 / scenes.len() as f64,
        );
        let (next, mut row) = grpo_train_step(
            &params,
            &reference,
            &scenes,
            &cfg.grpo,
            &cfg.reward,
            cfg.learning_rate,
            &mut master,
        )?;
        row.step = step;
        trace.push(row);
        params = next;
    }
    Ok(ExperimentResult {
        trace,
        mean_gt_count,
        final_params: params,
    })
}
