use std::path::PathBuf;
use std::process::ExitCode;

use chronobench::{chscore_from_visibility, CHScoreConfig, VisibilityMatrix};
use chronobench_cli::{finish, print_json, read_text, write_text, CliResult};
use clap::Parser;

/// Temporal coherence score from a tracker visibility payload.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// JSON payload `{"frames", "points", "grid_size"?, "vis"}`.
    #[arg(long)]
    vis: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Use the unclamped maximum jump (may be negative).
    #[arg(long)]
    raw_max: bool,
    /// Also write the full report (score, components, series) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn run(args: Args) -> CliResult {
    let vis = VisibilityMatrix::from_json(read_text(&args.vis)?.as_bytes())?;
    let cfg = CHScoreConfig {
        threshold: args.threshold,
        epsilon: args.epsilon,
        clamp_negative_max: !args.raw_max,
    };
    let report = chscore_from_visibility(&vis, &cfg)?;
    if let Some(path) = &args.report {
        write_text(path, &serde_json::to_string_pretty(&report)?)?;
    }
    print_json(&report)
}

fn main() -> ExitCode {
    finish(run(Args::parse()))
}
