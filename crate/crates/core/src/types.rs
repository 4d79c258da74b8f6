//! Domain types shared by the metrics, the curation pipeline and the harness.
//!
//! Every type here validates on construction and is immutable afterwards, so
//! values can be shared freely between worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scalar::{sum, Scalar};

/// Maximum prompt length, counted in whitespace-separated words.
pub const MAX_PROMPT_WORDS: usize = 77;

/// Tolerance used to decide whether a retrieval profile sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("dimension mismatch: {what} declared {declared}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("empty frames: a visibility matrix needs at least one frame and one point")]
    EmptyFrames,
    #[error("non-boolean entry at frame {frame}, point {point}")]
    NonBoolean { frame: usize, point: usize },
    #[error("grid mismatch: grid_size {grid_size} implies {} points, found {points}", grid_size * grid_size)]
    GridMismatch { grid_size: usize, points: usize },
    #[error("missed fraction {value} at frame {frame} is outside [0, 1]")]
    FractionOutOfRange { frame: usize, value: f64 },
    #[error("retrieval profile needs at least one {0} probability")]
    EmptyProfile(&'static str),
    #[error("probability {value} at index {index} is negative or not finite")]
    InvalidProbability { index: usize, value: f64 },
    #[error("expected {expected} sentence probabilities, found {found}")]
    SentenceCount { expected: usize, found: usize },
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("prompt has {words} words, limit is {MAX_PROMPT_WORDS}")]
    PromptTooLong { words: usize },
    #[error("invalid prompt id `{0}`")]
    InvalidPromptId(String),
    #[error("unknown major category `{0}`")]
    UnknownCategory(String),
    #[error("empty field `{0}`")]
    EmptyField(&'static str),
    #[error("seed index {0} outside 0..=2")]
    SeedIndex(u8),
    #[error("metric `{metric}` value {value} violates its range")]
    MetricRange { metric: &'static str, value: f64 },
}

/// Wire form of a visibility matrix, one row per frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityPayload {
    pub frames: usize,
    pub points: usize,
    pub grid_size: Option<usize>,
    pub vis: Vec<Vec<bool>>,
}

/// Per-frame, per-point visibility flags produced by a point tracker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMatrix {
    frames: usize,
    points: usize,
    grid_size: Option<usize>,
    // row-major, frames x points
    vis: Vec<bool>,
}

impl VisibilityMatrix {
    pub fn new(rows: Vec<Vec<bool>>, grid_size: Option<usize>) -> Result<Self, ValidationError> {
        let frames = rows.len();
        let points = rows.first().map_or(0, Vec::len);
        Self::from_payload(VisibilityPayload {
            frames,
            points,
            grid_size,
            vis: rows,
        })
    }

    pub fn from_payload(payload: VisibilityPayload) -> Result<Self, ValidationError> {
        let VisibilityPayload {
            frames,
            points,
            grid_size,
            vis,
        } = payload;
        if frames == 0 || points == 0 || vis.is_empty() {
            return Err(ValidationError::EmptyFrames);
        }
        if vis.len() != frames {
            return Err(ValidationError::DimensionMismatch {
                what: "frames",
                declared: frames,
                found: vis.len(),
            });
        }
        if let Some(row) = vis.iter().find(|row| row.len() != points) {
            return Err(ValidationError::DimensionMismatch {
                what: "points",
                declared: points,
                found: row.len(),
            });
        }
        if let Some(g) = grid_size {
            if g.checked_mul(g) != Some(points) {
                return Err(ValidationError::GridMismatch { grid_size: g, points });
            }
        }
        Ok(Self {
            frames,
            points,
            grid_size,
            vis: vis.into_iter().flatten().collect(),
        })
    }

    /// Decodes and validates the JSON visibility payload.
    pub fn from_json(bytes: &[u8]) -> Result<Self, ValidationError> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| ValidationError::Malformed(e.to_string()))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, ValidationError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ValidationError::Malformed("expected a JSON object".into()))?;
        let frames = count_field(obj, "frames")?;
        let points = count_field(obj, "points")?;
        let grid_size = match obj.get("grid_size") {
            None | Some(Value::Null) => None,
            Some(_) => Some(count_field(obj, "grid_size")?),
        };
        let rows = obj
            .get("vis")
            .ok_or(ValidationError::MissingField("vis"))?
            .as_array()
            .ok_or_else(|| ValidationError::Malformed("`vis` must be an array of rows".into()))?;
        let mut vis = Vec::with_capacity(rows.len());
        for (frame, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| ValidationError::Malformed(format!("row {frame} of `vis` is not an array")))?;
            let flags = row
                .iter()
                .enumerate()
                .map(|(point, v)| v.as_bool().ok_or(ValidationError::NonBoolean { frame, point }))
                .collect::<Result<Vec<_>, _>>()?;
            vis.push(flags);
        }
        Self::from_payload(VisibilityPayload {
            frames,
            points,
            grid_size,
            vis,
        })
    }

    pub fn to_payload(&self) -> VisibilityPayload {
        VisibilityPayload {
            frames: self.frames,
            points: self.points,
            grid_size: self.grid_size,
            vis: self.rows().map(<[bool]>::to_vec).collect(),
        }
    }

    /// Canonical JSON encoding (fixed key order, no whitespace).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_payload()).expect("payload serializes")
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn grid_size(&self) -> Option<usize> {
        self.grid_size
    }

    pub fn get(&self, frame: usize, point: usize) -> bool {
        assert!(frame < self.frames && point < self.points, "index out of bounds");
        self.vis[frame * self.points + point]
    }

    pub fn row(&self, frame: usize) -> &[bool] {
        &self.vis[frame * self.points..(frame + 1) * self.points]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[bool]> {
        self.vis.chunks(self.points)
    }

    /// Number of points not visible in `frame`.
    pub fn hidden_count(&self, frame: usize) -> usize {
        self.row(frame).iter().filter(|&&v| !v).count()
    }
}

fn count_field(obj: &serde_json::Map<String, Value>, key: &'static str) -> Result<usize, ValidationError> {
    let v = obj.get(key).ok_or(ValidationError::MissingField(key))?;
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| ValidationError::Malformed(format!("`{key}` must be a non-negative integer")))
}

/// Per-frame missed-point fractions and their consecutive differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingSeries<T> {
    m: Vec<T>,
    dm: Vec<T>,
}

impl<T: Scalar> MissingSeries<T> {
    /// Builds the series from per-frame fractions; differences are derived.
    pub fn from_fractions(m: Vec<T>) -> Result<Self, ValidationError> {
        if m.is_empty() {
            return Err(ValidationError::EmptyFrames);
        }
        for (frame, &v) in m.iter().enumerate() {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(ValidationError::FractionOutOfRange {
                    frame,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let dm = m.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { m, dm })
    }

    pub fn m(&self) -> &[T] {
        &self.m
    }

    pub fn dm(&self) -> &[T] {
        &self.dm
    }

    pub fn frames(&self) -> usize {
        self.m.len()
    }
}

/// The five sub-quantities summed in the coherence score's denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceComponents<T> {
    pub r_missed: T,
    pub v_missed: T,
    pub r_cut: T,
    pub c_missed: T,
    pub m_missed: T,
    /// Threshold on consecutive differences these were computed with.
    pub threshold: T,
}

impl<T: Scalar> CoherenceComponents<T> {
    pub fn sum(&self) -> T {
        self.r_missed + self.v_missed + self.r_cut + self.c_missed + self.m_missed
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.r_missed, self.v_missed, self.r_cut, self.c_missed, self.m_missed]
    }
}

/// Relevance probabilities of one video against the metamorphic and general sentences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalProfile<T> {
    meta_probs: Vec<T>,
    gen_probs: Vec<T>,
    normalized: bool,
}

/// Wire form: ten probabilities ordered as the canonical sentence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalPayload {
    pub sentence_probs: Vec<f64>,
}

impl<T: Scalar> RetrievalProfile<T> {
    pub fn new(meta_probs: Vec<T>, gen_probs: Vec<T>) -> Result<Self, ValidationError> {
        if meta_probs.is_empty() {
            return Err(ValidationError::EmptyProfile("metamorphic"));
        }
        if gen_probs.is_empty() {
            return Err(ValidationError::EmptyProfile("general"));
        }
        for (index, &p) in meta_probs.iter().chain(gen_probs.iter()).enumerate() {
            if !(p.is_finite() && p >= T::zero()) {
                return Err(ValidationError::InvalidProbability {
                    index,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let total = sum(&meta_probs) + sum(&gen_probs);
        let normalized = (total - T::one()).abs() <= T::lit(NORMALIZATION_TOLERANCE);
        Ok(Self {
            meta_probs,
            gen_probs,
            normalized,
        })
    }

    /// Splits ten sentence probabilities: the first five describe general
    /// videos, the last five metamorphic ones.
    pub fn from_sentence_probs(probs: &[T]) -> Result<Self, ValidationError> {
        if probs.len() != 10 {
            return Err(ValidationError::SentenceCount {
                expected: 10,
                found: probs.len(),
            });
        }
        Self::new(probs[5..].to_vec(), probs[..5].to_vec())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ValidationError> {
        let payload: RetrievalPayload =
            serde_json::from_slice(bytes).map_err(|e| ValidationError::Malformed(e.to_string()))?;
        Self::from_payload(&payload)
    }

    pub fn from_payload(payload: &RetrievalPayload) -> Result<Self, ValidationError> {
        let probs: Vec<T> = payload.sentence_probs.iter().map(|&p| T::lit(p)).collect();
        Self::from_sentence_probs(&probs)
    }

    pub fn meta_probs(&self) -> &[T] {
        &self.meta_probs
    }

    pub fn gen_probs(&self) -> &[T] {
        &self.gen_probs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn meta_total(&self) -> T {
        sum(&self.meta_probs)
    }

    pub fn gen_total(&self) -> T {
        sum(&self.gen_probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MajorCategory {
    Biological,
    HumanCreated,
    Meteorological,
    Physical,
}

impl MajorCategory {
    pub const ALL: [MajorCategory; 4] = [
        MajorCategory::Biological,
        MajorCategory::HumanCreated,
        MajorCategory::Meteorological,
        MajorCategory::Physical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MajorCategory::Biological => "biological",
            MajorCategory::HumanCreated => "human-created",
            MajorCategory::Meteorological => "meteorological",
            MajorCategory::Physical => "physical",
        }
    }
}

impl fmt::Display for MajorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MajorCategory {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ValidationError::UnknownCategory(s.to_string()))
    }
}

/// One benchmark prompt with its reference video and categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub prompt_id: String,
    pub prompt: String,
    pub reference_video: String,
    pub sub_category: String,
    pub major_category: MajorCategory,
}

impl BenchmarkEntry {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.prompt_id.is_empty() || self.prompt_id.chars().any(char::is_whitespace) {
            return Err(ValidationError::InvalidPromptId(self.prompt_id.clone()));
        }
        let words = self.prompt.split_whitespace().count();
        if words == 0 {
            return Err(ValidationError::EmptyPrompt);
        }
        if words > MAX_PROMPT_WORDS {
            return Err(ValidationError::PromptTooLong { words });
        }
        if self.sub_category.trim().is_empty() {
            return Err(ValidationError::EmptyField("sub_category"));
        }
        Ok(())
    }

    /// Stable `<major>-<sub>-<index>` identifier; the sub-category is slugified.
    pub fn make_prompt_id(major: MajorCategory, sub_category: &str, index: usize) -> String {
        let mut slug = String::new();
        for c in sub_category.trim().chars() {
            if c.is_ascii_alphanumeric() {
                slug.push(c.to_ascii_lowercase());
            } else if !slug.ends_with('_') {
                slug.push('_');
            }
        }
        let slug = slug.trim_matches('_');
        format!("{}-{}-{}", major.as_str(), slug, index)
    }
}

/// Metric values for one generated video: a (model, prompt, seed) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord<T> {
    pub model_id: String,
    pub prompt_id: String,
    pub seed_index: u8,
    pub chscore: Option<T>,
    pub mtscore: Option<T>,
    pub gpt4o_mtscore: Option<T>,
    #[serde(default)]
    pub external: BTreeMap<String, T>,
}

impl<T: Scalar> EvaluationRecord<T> {
    pub fn new(model_id: impl Into<String>, prompt_id: impl Into<String>, seed_index: u8) -> Self {
        Self {
            model_id: model_id.into(),
            prompt_id: prompt_id.into(),
            seed_index,
            chscore: None,
            mtscore: None,
            gpt4o_mtscore: None,
            external: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.seed_index > 2 {
            return Err(ValidationError::SeedIndex(self.seed_index));
        }
        let range = |metric, value: Option<T>, ok: &dyn Fn(T) -> bool| match value {
            Some(v) if !ok(v) => Err(ValidationError::MetricRange {
                metric,
                value: v.to_f64().unwrap_or(f64::NAN),
            }),
            _ => Ok(()),
        };
        range("chscore", self.chscore, &|v| v > T::zero() && v.is_finite())?;
        range("mtscore", self.mtscore, &|v| v >= T::zero() && v <= T::one())?;
        range("gpt4o_mtscore", self.gpt4o_mtscore, &|v| {
            v >= T::one() && v <= T::lit(5.0)
        })?;
        Ok(())
    }
}
