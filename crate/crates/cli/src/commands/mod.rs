pub mod dataset;
pub mod eval;
pub mod score;
pub mod sim;

use clap::ValueEnum;
use r1_reward_lab::{CategoryMode, OvdAccuracyKind, Task};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Rec,
    Ovd,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Rec => Task::Rec,
            TaskArg::Ovd => Task::Ovd,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RewardArg {
    Ap50,
    Map,
    Odlength,
}

impl From<RewardArg> for OvdAccuracyKind {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Ap50 => OvdAccuracyKind::Ap50,
            RewardArg::Map => OvdAccuracyKind::MeanAp,
            RewardArg::Odlength => OvdAccuracyKind::OdLength,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    GtOnly,
    Full,
}

impl From<ModeArg> for CategoryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::GtOnly => CategoryMode::GtOnly,
            ModeArg::Full => CategoryMode::FullVocabulary,
        }
    }
}

pub(crate) fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}
