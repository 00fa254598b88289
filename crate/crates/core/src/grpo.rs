//! GRPO numerics over per-completion sequence log-probabilities.
//!
//! The per-completion objective term is
//!
//! ```text
//! min(s * A, clip(s, 1 - eps, 1 + eps) * A) - beta * KL,   s = exp(logp - logp_old)
//! ```
//!
//! with the group objective the mean of the terms. KL uses the nonnegative
//! estimator `exp(d) - d - 1`, `d = logp_ref - logp`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("advantage normalization needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("probability ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("group field `{field}` has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("advantages have not been computed for this group")]
    MissingAdvantages,
    #[error("invalid GRPO config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub iterations: usize,
    /// Sampling temperature, consumed by the policy.
    pub temperature: f64,
    pub std_floor: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            epsilon: 0.2,
            beta: 0.04,
            iterations: 1,
            temperature: 0.9,
            std_floor: 1e-8,
        }
    }
}

impl GrpoConfig {
    /// Defaults for detection runs: identical except `beta = 0`.
    pub fn ovd() -> Self {
        Self {
            beta: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let bad = |m: &str| Err(GrpoError::InvalidConfig(m.to_string()));
        if self.group_size < 2 {
            return bad("group_size must be >= 2");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return bad("temperature must be > 0");
        }
        if self.std_floor.is_nan() || self.std_floor < 0.0 {
            return bad("std_floor must be >= 0");
        }
        Ok(())
    }
}

/// `(r_i - mean) / std` with the population standard deviation; all zeros
/// when the std falls below `std_floor`.
pub fn normalize_advantages(rewards: &[f64], std_floor: f64) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < std_floor || std == 0.0 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
pub fn clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> Result<f64, GrpoError> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(GrpoError::NonPositiveRatio(ratio));
    }
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// Whether the unclipped branch carries gradient at this ratio.
fn unclipped_active(ratio: f64, advantage: f64, epsilon: f64) -> bool {
    !((advantage > 0.0 && ratio > 1.0 + epsilon) || (advantage < 0.0 && ratio < 1.0 - epsilon))
}

/// `exp(d) - d - 1` with `d = logp_ref - logp_policy`.
pub fn kl_estimate(logp_policy: f64, logp_ref: f64) -> f64 {
    let d = logp_ref - logp_policy;
    (d.exp_m1() - d).max(0.0)
}

/// Derivative of one objective term with respect to `logp_policy`.
pub fn term_logp_derivative(
    logp_policy: f64,
    logp_old: f64,
    logp_ref: f64,
    advantage: f64,
    epsilon: f64,
    beta: f64,
) -> f64 {
    let ratio = (logp_policy - logp_old).exp();
    let surrogate = if unclipped_active(ratio, advantage, epsilon) {
        ratio * advantage
    } else {
        0.0
    };
    // d/dlp [exp(lr - lp) - (lr - lp) - 1] = 1 - exp(lr - lp)
    let kl = -(logp_ref - logp_policy).exp_m1();
    surrogate - beta * kl
}

/// One prompt's group of sampled completions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionGroup {
    pub prompt_id: String,
    pub rewards: Vec<f64>,
    advantages: Option<Vec<f64>>,
    pub logp_policy: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
}

impl CompletionGroup {
    pub fn new(
        prompt_id: impl Into<String>,
        rewards: Vec<f64>,
        logp_policy: Vec<f64>,
        logp_old: Vec<f64>,
        logp_ref: Vec<f64>,
    ) -> Result<Self, GrpoError> {
        let expected = rewards.len();
        for (field, len) in [
            ("logp_policy", logp_policy.len()),
            ("logp_old", logp_old.len()),
            ("logp_ref", logp_ref.len()),
        ] {
            if len != expected {
                return Err(GrpoError::LengthMismatch {
                    field,
                    got: len,
                    expected,
                });
            }
        }
        Ok(Self {
            prompt_id: prompt_id.into(),
            rewards,
            advantages: None,
            logp_policy,
            logp_old,
            logp_ref,
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn compute_advantages(&mut self, std_floor: f64) -> Result<&[f64], GrpoError> {
        let a = normalize_advantages(&self.rewards, std_floor)?;
        Ok(self.advantages.insert(a))
    }

    pub fn advantages(&self) -> Option<&[f64]> {
        self.advantages.as_deref()
    }
}

/// Group objective and its per-completion terms.
pub fn grpo_objective(
    group: &CompletionGroup,
    cfg: &GrpoConfig,
) -> Result<(f64, Vec<f64>), GrpoError> {
    let adv = group.advantages().ok_or(GrpoError::MissingAdvantages)?;
    let n = group.len();
    for (field, len) in [
        ("advantages", adv.len()),
        ("logp_policy", group.logp_policy.len()),
        ("logp_old", group.logp_old.len()),
        ("logp_ref", group.logp_ref.len()),
    ] {
        if len != n {
            return Err(GrpoError::LengthMismatch {
                field,
                got: len,
                expected: n,
            });
        }
    }
    let terms = (0..n)
        .map(|i| {
            let ratio = (group.logp_policy[i] - group.logp_old[i]).exp();
            let surrogate = clipped_term(ratio, adv[i], cfg.epsilon)?;
            Ok(surrogate - cfg.beta * kl_estimate(group.logp_policy[i], group.logp_ref[i]))
        })
        .collect::<Result<Vec<f64>, GrpoError>>()?;
    let objective = if n == 0 {
        0.0
    } else {
        terms.iter().sum::<f64>() / n as f64
    };
    Ok((objective, terms))
}
