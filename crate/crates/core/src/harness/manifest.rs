//! Benchmark manifests, hard-subset selection and run directories.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::types::{BenchmarkEntry, MajorCategory};

/// Number of prompts in the hard subset.
pub const BENCH150_SIZE: usize = 150;
pub const BENCH150_PER_CATEGORY: usize = 2;

#[derive(Deserialize)]
struct RawEntry {
    prompt_id: String,
    prompt: String,
    reference_video: String,
    sub_category: String,
    major_category: String,
}

/// Parses a JSON-lines benchmark manifest. Blank lines are skipped.
pub fn parse_benchmark(text: &str) -> Result<Vec<BenchmarkEntry>, HarnessError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| HarnessError::Manifest {
            line: line_no,
            message: e.to_string(),
        })?;
        let major_category: MajorCategory = raw.major_category.parse().map_err(|e| HarnessError::Manifest {
            line: line_no,
            message: format!("{e}"),
        })?;
        let entry = BenchmarkEntry {
            prompt_id: raw.prompt_id,
            prompt: raw.prompt,
            reference_video: raw.reference_video,
            sub_category: raw.sub_category,
            major_category,
        };
        entry.validate().map_err(|e| HarnessError::Manifest {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(entry.prompt_id.clone()) {
            return Err(HarnessError::DuplicatePrompt(entry.prompt_id));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkEntry>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_benchmark(&text)
}

/// Writes entries back as JSON lines.
pub fn benchmark_to_jsonl(entries: &[BenchmarkEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
        .collect()
}

/// Reads a selection file: one prompt id per line, `#` starts a comment.
pub fn load_selection(path: &Path) -> Result<Vec<String>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Keeps the selected entries in manifest order, requiring exactly
/// `per_category` selections from every sub-category in the manifest.
pub fn subset_per_category(
    entries: &[BenchmarkEntry],
    selection: &[String],
    per_category: usize,
) -> Result<Vec<BenchmarkEntry>, HarnessError> {
    if selection.is_empty() {
        return Err(HarnessError::Selection("empty selection".into()));
    }
    let by_id: HashMap<&str, &BenchmarkEntry> = entries.iter().map(|e| (e.prompt_id.as_str(), e)).collect();
    let mut chosen = HashSet::new();
    for id in selection {
        if !by_id.contains_key(id.as_str()) {
            return Err(HarnessError::Selection(format!("`{id}` is not in the manifest")));
        }
        if !chosen.insert(id.as_str()) {
            return Err(HarnessError::Selection(format!("`{id}` selected twice")));
        }
    }
    let mut counts: BTreeMap<&str, usize> = entries.iter().map(|e| (e.sub_category.as_str(), 0)).collect();
    for id in &chosen {
        *counts.get_mut(by_id[id].sub_category.as_str()).unwrap() += 1;
    }
    if let Some((cat, n)) = counts.iter().find(|(_, &n)| n != per_category) {
        return Err(HarnessError::Selection(format!(
            "sub-category `{cat}` has {n} selected prompts, expected {per_category}"
        )));
    }
    Ok(entries
        .iter()
        .filter(|e| chosen.contains(e.prompt_id.as_str()))
        .cloned()
        .collect())
}

/// The 150-prompt hard subset: two prompts from each of the 75 sub-categories.
pub fn subset_bench150(entries: &[BenchmarkEntry], selection: &[String]) -> Result<Vec<BenchmarkEntry>, HarnessError> {
    if selection.len() != BENCH150_SIZE {
        return Err(HarnessError::Selection(format!(
            "selection lists {} prompts, expected {BENCH150_SIZE}",
            selection.len()
        )));
    }
    subset_per_category(entries, selection, BENCH150_PER_CATEGORY)
}

/// One generated video of a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedVideo {
    pub seed_index: u8,
    pub path: PathBuf,
}

/// The generated videos of one model, keyed by prompt id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_id: String,
    pub entries: BTreeMap<String, Vec<SeedVideo>>,
}

pub const VISIBILITY_SIDECAR: &str = "vis.json";
pub const RETRIEVAL_SIDECAR: &str = "retrieval.json";

#[derive(Deserialize)]
struct ManifestOverride {
    model_id: String,
    entries: BTreeMap<String, Vec<PathBuf>>,
}

impl RunManifest {
    /// Scans `<run_root>/<prompt_id>/seed_<k>.<ext>`. Precomputed metric inputs
    /// may sit next to a video as `seed_<k>.vis.json` / `seed_<k>.retrieval.json`;
    /// a seed with only sidecars is referenced by its `seed_<k>` stem.
    pub fn from_run_root(model_id: &str, root: &Path) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        let dirs = fs::read_dir(root).map_err(|e| HarnessError::io(root, e))?;
        for dir in dirs {
            let dir = dir.map_err(|e| HarnessError::io(root, e))?.path();
            if !dir.is_dir() {
                continue;
            }
            let Some(prompt_id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
                continue;
            };
            let mut seeds: BTreeMap<u8, Option<PathBuf>> = BTreeMap::new();
            for file in fs::read_dir(&dir).map_err(|e| HarnessError::io(&dir, e))? {
                let path = file.map_err(|e| HarnessError::io(&dir, e))?.path();
                let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                    continue;
                };
                let Some((seed, ext)) = name.strip_prefix("seed_").and_then(|r| r.split_once('.')) else {
                    continue;
                };
                let seed: u8 = seed
                    .parse()
                    .map_err(|_| HarnessError::RunLayout(format!("bad seed file name {}", path.display())))?;
                let slot = seeds.entry(seed).or_default();
                if ext != VISIBILITY_SIDECAR && ext != RETRIEVAL_SIDECAR {
                    if slot.is_some() {
                        return Err(HarnessError::RunLayout(format!(
                            "several videos for seed {seed} in {}",
                            dir.display()
                        )));
                    }
                    *slot = Some(path.clone());
                }
            }
            let videos: Vec<SeedVideo> = seeds
                .into_iter()
                .map(|(seed_index, path)| SeedVideo {
                    seed_index,
                    path: path.unwrap_or_else(|| dir.join(format!("seed_{seed_index}"))),
                })
                .collect();
            if !videos.is_empty() {
                entries.insert(prompt_id, videos);
            }
        }
        let run = Self {
            model_id: model_id.to_string(),
            entries,
        };
        run.check_shape()?;
        Ok(run)
    }

    /// Explicit manifest: `{"model_id": ..., "entries": {"<prompt_id>": ["seed0 path", ...]}}`,
    /// list position being the seed index. Relative paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let raw: ManifestOverride =
            serde_json::from_str(text).map_err(|e| HarnessError::RunLayout(format!("run manifest: {e}")))?;
        let entries = raw
            .entries
            .into_iter()
            .map(|(id, paths)| {
                let videos = paths
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| SeedVideo {
                        seed_index: i as u8,
                        path: if p.is_absolute() { p } else { base.join(p) },
                    })
                    .collect();
                (id, videos)
            })
            .collect();
        let run = Self {
            model_id: raw.model_id,
            entries,
        };
        run.check_shape()?;
        Ok(run)
    }

    fn check_shape(&self) -> Result<(), HarnessError> {
        for (id, videos) in &self.entries {
            if videos.is_empty() || videos.len() > 3 {
                return Err(HarnessError::RunLayout(format!(
                    "prompt `{id}` has {} videos, expected 1 to 3",
                    videos.len()
                )));
            }
            if let Some(v) = videos.iter().find(|v| v.seed_index > 2) {
                return Err(HarnessError::RunLayout(format!(
                    "prompt `{id}` has seed {}",
                    v.seed_index
                )));
            }
        }
        Ok(())
    }

    /// Every prompt id must exist in the benchmark.
    pub fn check_against(&self, bench: &[BenchmarkEntry]) -> Result<(), HarnessError> {
        let ids: HashSet<&str> = bench.iter().map(|e| e.prompt_id.as_str()).collect();
        match self.entries.keys().find(|id| !ids.contains(id.as_str())) {
            Some(id) => Err(HarnessError::UnknownPrompt(id.clone())),
            None => Ok(()),
        }
    }

    pub fn video_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }
}

/// Path of a sidecar file next to `video`: `seed_0.mp4` -> `seed_0.<suffix>`.
pub fn sidecar(video: &Path, suffix: &str) -> PathBuf {
    let name = video.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let stem = name.split_once('.').map_or(name, |(s, _)| s);
    video.with_file_name(format!("{stem}.{suffix}"))
}
