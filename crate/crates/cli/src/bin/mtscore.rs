use std::path::PathBuf;
use std::process::ExitCode;

use chronobench::{classify_video, mtscore_coarse, RetrievalProfile};
use chronobench_cli::{finish, print_json, read_text, CliResult};
use clap::Parser;
use serde_json::json;

/// Coarse metamorphic score from a retrieval profile `{"sentence_probs": [p1..p10]}`.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    profile: PathBuf,
}

fn run(args: Args) -> CliResult {
    let profile = RetrievalProfile::<f64>::from_json(read_text(&args.profile)?.as_bytes())?;
    let score = mtscore_coarse(&profile)?;
    // The vote is only defined for normalized profiles.
    let class = classify_video(&profile).ok();
    print_json(&json!({
        "mtscore": score,
        "meta_total": profile.meta_total(),
        "gen_total": profile.gen_total(),
        "normalized": profile.is_normalized(),
        "class": class,
    }))
}

fn main() -> ExitCode {
    finish(run(Args::parse()))
}
