use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use r1_reward_lab::dataset::{parse_completions, parse_samples};
use r1_reward_lab::rewards::score_group;
use r1_reward_lab::{RewardConfig, RewardOutcome, Task};

use super::{unit_interval, ModeArg, RewardArg, TaskArg};
use crate::error::CliError;
use crate::output::{read_text, RunManifest, Staged};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Sample JSONL.
    #[arg(long)]
    samples: PathBuf,
    /// Completion JSONL, one group per sample id.
    #[arg(long)]
    completions: PathBuf,
    /// OVD accuracy reward.
    #[arg(long, value_enum, default_value = "odlength")]
    reward: RewardArg,
    #[arg(long, value_enum, default_value = "gt-only")]
    category_mode: ModeArg,
    /// Apply class-wise NMS to parsed detections before scoring.
    #[arg(long)]
    nms: bool,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    nms_thresh: f64,
    #[arg(long, default_value_t = 1.0)]
    accuracy_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    format_weight: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ScoreLine<'a> {
    id: &'a str,
    index: usize,
    #[serde(flatten)]
    outcome: &'a RewardOutcome,
}

impl ScoreArgs {
    fn reward_config(&self) -> RewardConfig {
        let mut cfg = match self.task {
            TaskArg::Rec => RewardConfig::rec(),
            TaskArg::Ovd => RewardConfig::ovd(self.reward.into(), self.category_mode.into()),
        };
        cfg.nms_before_scoring = self.nms;
        cfg.nms_thresh = self.nms_thresh;
        cfg.accuracy_weight = self.accuracy_weight;
        cfg.format_weight = self.format_weight;
        cfg
    }
}

pub fn run(args: &ScoreArgs) -> Result<(), CliError> {
    let cfg = args.reward_config();
    cfg.validate()?;
    let task: Task = args.task.into();

    let (samples_text, samples_bytes) = read_text(&args.samples)?;
    let (completions_text, completions_bytes) = read_text(&args.completions)?;
    let loc = |p: &PathBuf, e: r1_reward_lab::dataset::DatasetError| {
        CliError::usage(format!("{}: {e}", p.display()))
    };
    let samples = parse_samples(&samples_text).map_err(|e| loc(&args.samples, e))?;
    let groups = parse_completions(&completions_text).map_err(|e| loc(&args.completions, e))?;

    let mut by_id = HashMap::new();
    for s in &samples {
        if s.task != task {
            return Err(CliError::usage(format!("sample {:?} is not a {task:?} sample", s.id)));
        }
        if by_id.insert(s.id.as_str(), s).is_some() {
            return Err(CliError::usage(format!("duplicate sample id {:?}", s.id)));
        }
    }
    let mut seen = HashSet::new();
    for g in &groups {
        if !by_id.contains_key(g.id.as_str()) {
            return Err(CliError::usage(format!("completion id {:?} has no sample", g.id)));
        }
        if !seen.insert(g.id.as_str()) {
            return Err(CliError::usage(format!("duplicate completion id {:?}", g.id)));
        }
        if g.completions.is_empty() {
            return Err(CliError::usage(format!("completion group {:?} is empty", g.id)));
        }
    }

    let scored = groups
        .par_iter()
        .map(|g| {
            let target = by_id[g.id.as_str()]
                .target()
                .ok_or_else(|| CliError::Internal(format!("sample {:?} lost its target", g.id)))?;
            Ok(score_group(&g.completions, &target, &cfg)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut out = String::new();
    for (g, outcomes) in groups.iter().zip(&scored) {
        for (index, outcome) in outcomes.iter().enumerate() {
            out.push_str(&serde_json::to_string(&ScoreLine { id: &g.id, index, outcome })?);
            out.push('\n');
        }
    }

    let mut manifest = RunManifest::new("score", &cfg, None)?;
    manifest.input("samples", &args.samples, &samples_bytes);
    manifest.input("completions", &args.completions, &completions_bytes);
    let mut staged = Staged::default();
    staged.add(&args.out, out.into_bytes())?;
    staged.commit(manifest, &args.out)?;
    let n: usize = scored.iter().map(Vec::len).sum();
    eprintln!("scored {n} completions in {} groups -> {}", groups.len(), args.out.display());
    Ok(())
}
