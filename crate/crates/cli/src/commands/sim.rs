use std::path::PathBuf;

use clap::Args;

use r1_reward_lab::sim::{run_experiment, trace_to_csv, ExperimentConfig};

use super::{ModeArg, RewardArg};
use crate::error::CliError;
use crate::output::{RunManifest, Staged};

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value = "odlength")]
    reward: RewardArg,
    #[arg(long, value_enum, default_value = "gt-only")]
    category_mode: ModeArg,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 8)]
    group_size: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    temperature: f64,
    /// Scenes per training step.
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 3)]
    max_objects: usize,
    /// Trace CSV output.
    #[arg(long)]
    trace: PathBuf,
    /// Final-parameters JSON; defaults to the trace path with `.params.json`.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl SimArgs {
    fn experiment(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.reward.into(), self.category_mode.into(), self.steps, self.seed);
        cfg.grpo.beta = self.beta;
        cfg.grpo.group_size = self.group_size;
        cfg.grpo.epsilon = self.epsilon;
        cfg.grpo.temperature = self.temperature;
        cfg.learning_rate = self.lr;
        cfg.scenes.batch_size = self.batch_size;
        cfg.scenes.max_objects = self.max_objects;
        cfg
    }
}

pub fn run(args: &SimArgs) -> Result<(), CliError> {
    let cfg = args.experiment();
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    let params_path = args
        .params
        .clone()
        .unwrap_or_else(|| args.trace.with_extension("params.json"));
    if params_path == args.trace {
        return Err(CliError::usage("--params must differ from --trace"));
    }
    let mut params = serde_json::to_string_pretty(&result.final_params)?;
    params.push('\n');

    let mut staged = Staged::default();
    staged.add(&args.trace, trace_to_csv(&result.trace).into_bytes())?;
    staged.add(&params_path, params.into_bytes())?;
    staged.commit(RunManifest::new("sim", &cfg, Some(cfg.seed))?, &args.trace)?;
    if let Some(last) = result.trace.last() {
        eprintln!(
            "step {}: mean_reward {:.4}, mean_pred_count {:.3}, mean_negative_emissions {:.3}",
            last.step, last.mean_reward, last.mean_pred_count, last.mean_negative_emissions
        );
    }
    Ok(())
}
