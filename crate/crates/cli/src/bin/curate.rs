use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chronobench::backend::Retriever;
use chronobench::curation::{
    caption_clip, filter_metamorphic, merge_similar_clips, split_sequence, ClipBoundary, ClipFeature, CurationConfig,
};
use chronobench::frames::FrameSequence;
use chronobench::types::RetrievalPayload;
use chronobench::RetrievalProfile;
use chronobench_cli::{connect, finish, print_json, read_text, CliResult};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

/// Time-lapse clip curation: cut, re-merge, filter and caption.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut a frame sequence wherever adjacent frames differ by more than tau.
    Split {
        /// Planar `.frames` file or image directory.
        #[arg(long)]
        frames: PathBuf,
        /// Mean absolute difference per sample (0-255 scale).
        #[arg(long, default_value_t = CurationConfig::default().tau_per_sample)]
        tau: f64,
    },
    /// Re-join adjacent clips whose boundary embeddings are within eta.
    Merge {
        /// Boundary JSON as printed by `split`.
        #[arg(long)]
        boundary: PathBuf,
        /// JSON array of `{clip_index, frame_position, boundary_feature}`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = CurationConfig::default().eta)]
        eta: f64,
    },
    /// Keep the clips whose retrieval profile votes metamorphic.
    Filter {
        /// JSON array of `{"clip": ..., "sentence_probs": [...]}`.
        #[arg(long, conflicts_with_all = ["videos", "backend"])]
        profiles: Option<PathBuf>,
        /// One clip video per line; profiles are fetched from `--backend`.
        #[arg(long, requires = "backend")]
        videos: Option<PathBuf>,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, default_value_t = 120)]
        deadline_secs: u64,
    },
    /// Caption sampled frames of a clip, then summarize them into one caption.
    Caption {
        #[arg(long)]
        frames: PathBuf,
        /// Restrict to frames `[start, end)`.
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        end: Option<usize>,
        #[arg(long, default_value_t = CurationConfig::default().caption_frames)]
        n_frames: usize,
        #[arg(long)]
        backend: String,
        #[arg(long, default_value_t = 120)]
        deadline_secs: u64,
    },
}

#[derive(Deserialize)]
struct ProfiledClip {
    clip: serde_json::Value,
    #[serde(flatten)]
    payload: RetrievalPayload,
}

fn run(args: Args) -> CliResult {
    match args.command {
        Command::Split { frames, tau } => {
            let seq = FrameSequence::open(&frames)?;
            print_json(&split_sequence(&seq, tau)?)
        }
        Command::Merge {
            boundary,
            features,
            eta,
        } => {
            let boundary: ClipBoundary = serde_json::from_str(&read_text(&boundary)?)?;
            // Re-validate: the file may have been edited by hand.
            let boundary = ClipBoundary::new(boundary.clips().to_vec())?;
            let feats: Vec<ClipFeature<f64>> = serde_json::from_str(&read_text(&features)?)?;
            print_json(&merge_similar_clips(&boundary, &feats, eta)?)
        }
        Command::Filter {
            profiles,
            videos,
            backend,
            deadline_secs,
        } => {
            let (clips, profiles) = match (profiles, videos, backend) {
                (Some(path), _, _) => {
                    let items: Vec<ProfiledClip> = serde_json::from_str(&read_text(&path)?)?;
                    let profiles = items
                        .iter()
                        .map(|c| RetrievalProfile::<f64>::from_payload(&c.payload))
                        .collect::<Result<Vec<_>, _>>()?;
                    (items.into_iter().map(|c| c.clip).collect::<Vec<_>>(), profiles)
                }
                (None, Some(list), Some(spec)) => {
                    let backend = connect(&spec, 4, Duration::from_secs(deadline_secs), "filter")?;
                    let videos: Vec<String> = read_text(&list)?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(str::to_string)
                        .collect();
                    let mut profiles = Vec::with_capacity(videos.len());
                    for v in &videos {
                        profiles.push(RetrievalProfile::<f64>::from_payload(&backend.retrieve(v)?)?);
                    }
                    (videos.into_iter().map(serde_json::Value::from).collect(), profiles)
                }
                _ => return Err("give --profiles, or --videos with --backend".into()),
            };
            let kept = filter_metamorphic(&clips, &profiles)?;
            print_json(&json!({ "total": clips.len(), "kept": kept }))
        }
        Command::Caption {
            frames,
            start,
            end,
            n_frames,
            backend,
            deadline_secs,
        } => {
            let seq = FrameSequence::open(&frames)?;
            let seq = seq.slice(start.unwrap_or(0), end.unwrap_or(seq.len()))?;
            let backend = connect(&backend, 1, Duration::from_secs(deadline_secs), "caption")?;
            let caption = caption_clip(&seq, n_frames, &backend, &backend)?;
            print_json(&json!({ "frames": seq.len(), "caption": caption }))
        }
    }
}

fn main() -> ExitCode {
    finish(run(Args::parse()))
}
