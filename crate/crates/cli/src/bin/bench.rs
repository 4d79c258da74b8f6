use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chronobench::harness::{
    aggregate, attach_external, correlate_leaderboard, evaluate_run, load_benchmark, load_external_csv, load_human_csv,
    load_selection, subset_bench150, Aggregation, Backends, EvalConfig, ExternalValues, MetricSet, Report, RunManifest,
    RunSettings,
};
use chronobench::protocol::RemoteBackend;
use chronobench::types::BenchmarkEntry;
use chronobench_cli::{connect, finish, read_text, write_report, CliResult};
use clap::{Args as ClapArgs, Parser, Subcommand};

/// Benchmark driver: evaluate generated videos, build leaderboards and
/// correlate them with human ratings.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapArgs)]
struct BenchArgs {
    /// Benchmark prompts, one JSON object per line.
    #[arg(long)]
    manifest: PathBuf,
    /// Restrict to the 150-prompt hard subset listed in this file (one id per line).
    #[arg(long)]
    selection: Option<PathBuf>,
    /// CSV of externally computed metrics (per model, or per video with
    /// `prompt_id` and `seed_index` columns).
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    aggregation: Aggregation,
}

#[derive(Subcommand)]
enum Command {
    /// Score one model's videos and write report JSON + CSV + Markdown.
    Run {
        #[command(flatten)]
        bench: BenchArgs,
        /// `<run-root>/<prompt_id>/seed_<k>.<ext>`, with optional sidecars.
        #[arg(long)]
        run_root: PathBuf,
        /// Explicit video list overriding the directory scan.
        #[arg(long)]
        run_manifest: Option<PathBuf>,
        /// Defaults to the run root's directory name.
        #[arg(long)]
        model_id: Option<String>,
        #[arg(long, default_value = "chscore,mtscore", value_parser = MetricSet::parse)]
        metrics: MetricSet,
        /// Adapter for every backend role not given separately.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        tracker: Option<String>,
        #[arg(long)]
        retriever: Option<String>,
        #[arg(long)]
        rubric: Option<String>,
        #[arg(long, default_value_t = EvalConfig::default().workers)]
        workers: usize,
        #[arg(long, default_value_t = EvalConfig::default().grid_size)]
        grid_size: usize,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 8)]
        gpt_frames: usize,
        #[arg(long, default_value_t = 120)]
        deadline_secs: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge the records of several reports into one leaderboard.
    Aggregate {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long = "reports", num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kendall tau and Spearman rho of leaderboard columns against human ratings.
    Correlate {
        #[arg(long)]
        report: PathBuf,
        /// `model_id` plus one column per rated leaderboard column.
        #[arg(long)]
        human: PathBuf,
        /// Defaults to rewriting the input report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_bench(args: &BenchArgs) -> Result<Vec<BenchmarkEntry>, Box<dyn std::error::Error>> {
    let entries = load_benchmark(&args.manifest)?;
    Ok(match &args.selection {
        Some(path) => subset_bench150(&entries, &load_selection(path)?)?,
        None => entries,
    })
}

fn load_external(path: Option<&Path>) -> Result<ExternalValues, Box<dyn std::error::Error>> {
    Ok(match path {
        Some(p) => load_external_csv(p)?,
        None => ExternalValues::default(),
    })
}

fn run(args: Args) -> CliResult {
    match args.command {
        Command::Run {
            bench,
            run_root,
            run_manifest,
            model_id,
            metrics,
            backend,
            tracker,
            retriever,
            rubric,
            workers,
            grid_size,
            threshold,
            epsilon,
            gpt_frames,
            deadline_secs,
            out,
        } => {
            let entries = load_bench(&bench)?;
            let run = match run_manifest {
                Some(path) => RunManifest::from_json(&read_text(&path)?, &run_root)?,
                None => {
                    let id = match model_id {
                        Some(id) => id,
                        None => run_root
                            .canonicalize()?
                            .file_name()
                            .and_then(|n| n.to_str())
                            .ok_or("cannot derive a model id from the run root; pass --model-id")?
                            .to_string(),
                    };
                    RunManifest::from_run_root(&id, &run_root)?
                }
            };
            let mut cfg = EvalConfig {
                metrics,
                grid_size,
                workers,
                ..EvalConfig::default()
            };
            cfg.chscore.threshold = threshold;
            cfg.chscore.epsilon = epsilon;
            cfg.gpt.sample_count = gpt_frames;

            let deadline = Duration::from_secs(deadline_secs);
            let open =
                |role: Option<String>, prefix: &str| -> Result<Option<RemoteBackend>, Box<dyn std::error::Error>> {
                    match role.or_else(|| backend.clone()) {
                        Some(spec) => Ok(Some(connect(&spec, workers.max(1), deadline, prefix)?)),
                        None => Ok(None),
                    }
                };
            let tracker = if metrics.chscore { open(tracker, "track")? } else { None };
            let retriever = if metrics.mtscore {
                open(retriever, "retrieve")?
            } else {
                None
            };
            let rubric = if metrics.gptscore {
                open(rubric, "rubric")?
            } else {
                None
            };
            let backends = Backends {
                tracker: tracker.as_ref().map(|b| b as _),
                retriever: retriever.as_ref().map(|b| b as _),
                rubric: rubric.as_ref().map(|b| b as _),
            };

            let mut outcome = evaluate_run(&run, &entries, &cfg, backends)?;
            for f in &outcome.failures {
                eprintln!(
                    "warning: {}/{}/seed_{} {}: {}",
                    f.model_id, f.prompt_id, f.seed_index, f.metric, f.message
                );
            }
            let external = load_external(bench.external.as_deref())?;
            attach_external(&mut outcome.records, &external);
            let board = aggregate(&outcome.records, &entries, bench.aggregation, &external.per_model)?;
            let settings = RunSettings {
                eval: cfg,
                aggregation: bench.aggregation,
            };
            let report = Report::new(Some(settings), outcome.records, outcome.failures, board);
            write_report(&report, &out)?;
            eprintln!(
                "{} records, {} failures -> {}",
                report.records.len(),
                report.failures.len(),
                out.display()
            );
            Ok(())
        }
        Command::Aggregate { bench, reports, out } => {
            let entries = load_bench(&bench)?;
            let mut records = Vec::new();
            let mut failures = Vec::new();
            let mut model_level: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for path in &reports {
                let report = Report::from_json(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
                records.extend(report.records);
                failures.extend(report.failures);
                for (model, row) in report.leaderboard.models {
                    model_level.entry(model).or_default().extend(row.model_level);
                }
            }
            // Records outside the (possibly reduced) benchmark are dropped.
            records.retain(|r| entries.iter().any(|e| e.prompt_id == r.prompt_id));
            let external = load_external(bench.external.as_deref())?;
            attach_external(&mut records, &external);
            for (model, values) in external.per_model {
                model_level.entry(model).or_default().extend(values);
            }
            let board = aggregate(&records, &entries, bench.aggregation, &model_level)?;
            write_report(&Report::new(None, records, failures, board), &out)?;
            Ok(())
        }
        Command::Correlate { report, human, out } => {
            let mut parsed =
                Report::from_json(&read_text(&report)?).map_err(|e| format!("{}: {e}", report.display()))?;
            let ratings = load_human_csv(&human)?;
            parsed.correlations = correlate_leaderboard(&parsed.leaderboard, &ratings)?;
            for row in &parsed.correlations {
                println!(
                    "{}: models={} kendall_tau={:.4} spearman_rho={:.4}",
                    row.column, row.models, row.kendall_tau, row.spearman_rho
                );
            }
            write_report(&parsed, out.as_deref().unwrap_or(&report))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    finish(run(Args::parse()))
}
