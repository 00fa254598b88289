mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;

const THREADS_ENV: &str = "R1_REWARD_LAB_THREADS";

#[derive(Parser)]
#[command(name = "r1-reward-lab", version, about = "Rule-based rewards, detection metrics and a reward-hacking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score completion groups against their samples.
    Score(commands::score::ScoreArgs),
    /// Evaluate detection predictions against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Train the toy policy with GRPO and write its trace.
    Sim(commands::sim::SimArgs),
    /// Dataset preparation recipes.
    #[command(subcommand)]
    Dataset(commands::dataset::DatasetCommand),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Score(a) => commands::score::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Sim(a) => commands::sim::run(&a),
        Command::Dataset(c) => commands::dataset::run(&c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
