use r1_reward_lab::dataset::DatasetError;
use r1_reward_lab::rewards::RewardError;
use r1_reward_lab::sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, invalid inputs or I/O trouble; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// A bug or an unexpected library failure; exit code 1.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Grpo(_) | SimError::Reward(_) | SimError::NotAttributable(_) => {
                CliError::Internal(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("serialization failed: {e}"))
    }
}
