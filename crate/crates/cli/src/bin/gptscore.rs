use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chronobench::mtscore::{gpt_mtscore_path, Rubric};
use chronobench::GPTScoreConfig;
use chronobench_cli::{connect, finish, print_json, CliResult};
use clap::Parser;
use serde_json::json;

/// Five-level rubric score of a video, graded by a multimodal adapter.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Planar `.frames` file or image directory; anything else is passed to
    /// the adapter by path.
    #[arg(long)]
    video: PathBuf,
    /// Frames sampled uniformly from the video.
    #[arg(long, default_value_t = 8)]
    frames: usize,
    /// `stdio:<command>` or `http(s)://...`.
    #[arg(long)]
    backend: String,
    #[arg(long, default_value_t = 2)]
    max_retries: usize,
    #[arg(long, default_value_t = 120)]
    deadline_secs: u64,
}

fn run(args: Args) -> CliResult {
    let cfg = GPTScoreConfig {
        sample_count: args.frames,
        max_retries: args.max_retries,
        ..GPTScoreConfig::default()
    };
    let backend = connect(&args.backend, 1, Duration::from_secs(args.deadline_secs), "gpt")?;
    let score = gpt_mtscore_path(&args.video, &Rubric::canonical(), &cfg, &backend)?;
    print_json(&json!({ "video": args.video, "gpt4o_mtscore": score }))
}

fn main() -> ExitCode {
    finish(run(Args::parse()))
}
