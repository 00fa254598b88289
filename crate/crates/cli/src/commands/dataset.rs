use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use r1_reward_lab::dataset::{
    filter_coco_categories, parse_samples, sample_negatives, write_samples, CocoAnnotationSet,
    FilterScope, DEFAULT_MAX_BOXES,
};

use crate::error::CliError;
use crate::output::{read_text, RunManifest, Staged};

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Drop every annotation of a category that is too crowded.
    FilterCoco(FilterArgs),
    /// Append sampled hard-negative targets to OVD samples.
    Negatives(NegativesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeArg {
    Image,
    Dataset,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// COCO instances JSON.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_BOXES)]
    max_boxes: usize,
    #[arg(long, value_enum, default_value = "image")]
    scope: ScopeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NegativesArgs {
    /// Sample JSONL.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct FilterConfig {
    max_boxes: usize,
    scope: ScopeArg,
}

pub fn run(cmd: &DatasetCommand) -> Result<(), CliError> {
    match cmd {
        DatasetCommand::FilterCoco(a) => filter(a),
        DatasetCommand::Negatives(a) => negatives(a),
    }
}

fn filter(args: &FilterArgs) -> Result<(), CliError> {
    if args.max_boxes < 1 {
        return Err(CliError::usage("--max-boxes must be >= 1"));
    }
    let (text, bytes) = read_text(&args.input)?;
    let set = CocoAnnotationSet::from_json(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.input.display())))?;
    let scope = match args.scope {
        ScopeArg::Image => FilterScope::Image,
        ScopeArg::Dataset => FilterScope::Dataset,
    };
    let out = filter_coco_categories(&set, args.max_boxes, scope);
    let removed = set.annotations.len() - out.annotations.len();

    let mut manifest = RunManifest::new(
        "dataset filter-coco",
        FilterConfig { max_boxes: args.max_boxes, scope: args.scope },
        None,
    )?;
    manifest.input("in", &args.input, &bytes);
    let mut staged = Staged::default();
    staged.add(&args.out, (out.to_json() + "\n").into_bytes())?;
    staged.commit(manifest, &args.out)?;
    eprintln!(
        "kept {} of {} annotations ({removed} removed) -> {}",
        out.annotations.len(),
        set.annotations.len(),
        args.out.display()
    );
    Ok(())
}

fn negatives(args: &NegativesArgs) -> Result<(), CliError> {
    let (text, bytes) = read_text(&args.input)?;
    let records = parse_samples(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.input.display())))?;
    if records.len() < 2 {
        return Err(CliError::usage(format!(
            "{}: need at least 2 samples to draw negatives from, got {}",
            args.input.display(),
            records.len()
        )));
    }
    let out = sample_negatives(&records, args.seed);

    let mut manifest = RunManifest::new("dataset negatives", serde_json::json!({}), Some(args.seed))?;
    manifest.input("in", &args.input, &bytes);
    let mut staged = Staged::default();
    staged.add(&args.out, write_samples(&out).into_bytes())?;
    staged.commit(manifest, &args.out)?;
    eprintln!("augmented {} samples -> {}", out.len(), args.out.display());
    Ok(())
}
