//! Benchmark driver: evaluate a model's generated videos, aggregate
//! leaderboards and correlate metric columns with human ratings.

mod leaderboard;
mod manifest;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use self::leaderboard::{
    aggregate, correlate, correlate_leaderboard, load_human_csv, Aggregation, Column, CorrelationRow, Leaderboard,
    MetricCell, ModelRow, ScopeRow,
};
pub use self::manifest::{
    benchmark_to_jsonl, load_benchmark, load_selection, parse_benchmark, sidecar, subset_bench150, subset_per_category,
    RunManifest, SeedVideo, BENCH150_PER_CATEGORY, BENCH150_SIZE, RETRIEVAL_SIDECAR, VISIBILITY_SIDECAR,
};
pub use self::report::{Report, RunSettings};

use crate::backend::{Retriever, RubricScorer, Tracker};
use crate::chscore::{chscore_from_visibility, CHScoreConfig, DEFAULT_GRID_SIZE};
use crate::mtscore::{gpt_mtscore_path, mtscore_coarse, GPTScoreConfig, Rubric};
use crate::pool::parallel_map;
use crate::stats::StatsError;
use crate::types::{BenchmarkEntry, EvaluationRecord, RetrievalProfile, VisibilityMatrix};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate prompt id `{0}`")]
    DuplicatePrompt(String),
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("run layout: {0}")]
    RunLayout(String),
    #[error("prompt `{0}` is not in the benchmark manifest")]
    UnknownPrompt(String),
    #[error("run has no evaluable videos")]
    EmptyRun,
    #[error("no records to aggregate")]
    NoRecords,
    #[error("csv: {0}")]
    Csv(String),
    #[error("correlation needs at least 2 models present in both inputs, found {0}")]
    TooFewModels(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub chscore: bool,
    pub mtscore: bool,
    pub gptscore: bool,
}

impl MetricSet {
    /// Parses a comma-separated list such as `chscore,mtscore`.
    pub fn parse(list: &str) -> Result<Self, String> {
        let mut set = MetricSet {
            chscore: false,
            mtscore: false,
            gptscore: false,
        };
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "chscore" => set.chscore = true,
                "mtscore" => set.mtscore = true,
                "gptscore" | "gpt4o_mtscore" => set.gptscore = true,
                other => return Err(format!("unknown metric `{other}`")),
            }
        }
        if !(set.chscore || set.mtscore || set.gptscore) {
            return Err("no metrics selected".into());
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub metrics: MetricSet,
    pub chscore: CHScoreConfig<f64>,
    pub grid_size: usize,
    pub gpt: GPTScoreConfig,
    /// Videos evaluated concurrently.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metrics: MetricSet {
                chscore: true,
                mtscore: true,
                gptscore: false,
            },
            chscore: CHScoreConfig::default(),
            grid_size: DEFAULT_GRID_SIZE,
            gpt: GPTScoreConfig::default(),
            workers: 4,
        }
    }
}

/// Backends consulted when a video has no precomputed sidecar.
#[derive(Clone, Copy, Default)]
pub struct Backends<'a> {
    pub tracker: Option<&'a dyn Tracker>,
    pub retriever: Option<&'a dyn Retriever>,
    pub rubric: Option<&'a dyn RubricScorer>,
}

/// A metric that could not be computed for one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub model_id: String,
    pub prompt_id: String,
    pub seed_index: u8,
    pub video: String,
    pub metric: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub records: Vec<EvaluationRecord<f64>>,
    pub failures: Vec<Failure>,
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn visibility_for(video: &Path, tracker: Option<&dyn Tracker>, grid_size: usize) -> Result<VisibilityMatrix, String> {
    let side = sidecar(video, VISIBILITY_SIDECAR);
    if side.exists() {
        return VisibilityMatrix::from_json(&read(&side)?).map_err(|e| format!("{}: {e}", side.display()));
    }
    let tracker = tracker.ok_or("no visibility sidecar and no tracker endpoint")?;
    tracker
        .track(&video.to_string_lossy(), grid_size)
        .map_err(|e| e.to_string())
}

fn profile_for(video: &Path, retriever: Option<&dyn Retriever>) -> Result<RetrievalProfile<f64>, String> {
    let side = sidecar(video, RETRIEVAL_SIDECAR);
    if side.exists() {
        return RetrievalProfile::from_json(&read(&side)?).map_err(|e| format!("{}: {e}", side.display()));
    }
    let retriever = retriever.ok_or("no retrieval sidecar and no retrieval endpoint")?;
    let payload = retriever
        .retrieve(&video.to_string_lossy())
        .map_err(|e| e.to_string())?;
    RetrievalProfile::from_payload(&payload).map_err(|e| e.to_string())
}

struct Job<'a> {
    prompt_id: &'a str,
    video: &'a SeedVideo,
}

/// Evaluates every video of `run`, in benchmark order then seed order.
/// Per-video failures are collected instead of aborting the run.
pub fn evaluate_run(
    run: &RunManifest,
    bench: &[BenchmarkEntry],
    cfg: &EvalConfig,
    backends: Backends<'_>,
) -> Result<RunOutcome, HarnessError> {
    run.check_against(bench)?;
    let jobs: Vec<Job<'_>> = bench
        .iter()
        .filter_map(|e| run.entries.get(&e.prompt_id).map(|v| (e.prompt_id.as_str(), v)))
        .flat_map(|(prompt_id, videos)| videos.iter().map(move |video| Job { prompt_id, video }))
        .collect();
    if jobs.is_empty() {
        return Err(HarnessError::EmptyRun);
    }

    let results = parallel_map(&jobs, cfg.workers, |job| {
        let mut record = EvaluationRecord::<f64>::new(&run.model_id, job.prompt_id, job.video.seed_index);
        let mut failures = Vec::new();
        let path = job.video.path.as_path();
        let mut fail = |metric: &str, message: String| {
            failures.push(Failure {
                model_id: run.model_id.clone(),
                prompt_id: job.prompt_id.to_string(),
                seed_index: job.video.seed_index,
                video: path.to_string_lossy().into_owned(),
                metric: metric.to_string(),
                message,
            })
        };
        if cfg.metrics.chscore {
            match visibility_for(path, backends.tracker, cfg.grid_size)
                .and_then(|vis| chscore_from_visibility(&vis, &cfg.chscore).map_err(|e| e.to_string()))
            {
                Ok(report) => record.chscore = Some(report.score),
                Err(e) => fail("chscore", e),
            }
        }
        if cfg.metrics.mtscore {
            match profile_for(path, backends.retriever).and_then(|p| mtscore_coarse(&p).map_err(|e| e.to_string())) {
                Ok(score) => record.mtscore = Some(score),
                Err(e) => fail("mtscore", e),
            }
        }
        if cfg.metrics.gptscore {
            match backends
                .rubric
                .ok_or_else(|| "no rubric endpoint".to_string())
                .and_then(|b| gpt_mtscore_path(path, &Rubric::canonical(), &cfg.gpt, b).map_err(|e| e.to_string()))
            {
                Ok(score) => record.gpt4o_mtscore = Some(f64::from(score)),
                Err(e) => fail("gpt4o_mtscore", e),
            }
        }
        let any = record.chscore.is_some() || record.mtscore.is_some() || record.gpt4o_mtscore.is_some();
        (any.then_some(record), failures)
    });

    let mut outcome = RunOutcome {
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (record, failures) in results {
        outcome.records.extend(record);
        outcome.failures.extend(failures);
    }
    Ok(outcome)
}

/// Externally computed metric values (e.g. feature-space distances).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalValues {
    /// `(model_id, prompt_id, seed_index)` -> name -> value.
    pub per_record: HashMap<(String, String, u8), BTreeMap<String, f64>>,
    /// Values reported once per model, shown verbatim on the leaderboard.
    pub per_model: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Reads a CSV with a `model_id` column plus metric columns. With
/// `prompt_id` and `seed_index` columns the values are per video,
/// otherwise per model. Empty cells are skipped.
pub fn load_external_csv(path: &Path) -> Result<ExternalValues, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::Csv(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| HarnessError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let model_col = col("model_id").ok_or_else(|| HarnessError::Csv("missing `model_id` column".into()))?;
    let key_cols = col("prompt_id").zip(col("seed_index"));
    let value_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !matches!(*h, "model_id" | "prompt_id" | "seed_index"))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut out = ExternalValues::default();
    for (row_no, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| HarnessError::Csv(e.to_string()))?;
        let mut values = BTreeMap::new();
        for (i, name) in &value_cols {
            let cell = row.get(*i).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| HarnessError::Csv(format!("row {}: `{cell}` in `{name}` is not a number", row_no + 2)))?;
            values.insert(name.clone(), v);
        }
        let model = row.get(model_col).unwrap_or("").to_string();
        match key_cols {
            Some((p, s)) => {
                let seed: u8 = row
                    .get(s)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| HarnessError::Csv(format!("row {}: bad seed_index", row_no + 2)))?;
                let key = (model, row.get(p).unwrap_or("").to_string(), seed);
                out.per_record.entry(key).or_default().extend(values);
            }
            None => out.per_model.entry(model).or_default().extend(values),
        }
    }
    Ok(out)
}

/// Copies per-video external values onto matching records.
pub fn attach_external(records: &mut [EvaluationRecord<f64>], ext: &ExternalValues) {
    for r in records {
        if let Some(values) = ext
            .per_record
            .get(&(r.model_id.clone(), r.prompt_id.clone(), r.seed_index))
        {
            r.external.extend(values.iter().map(|(k, v)| (k.clone(), *v)));
        }
    }
}
