//! Metamorphic amplitude: the retrieval-based coarse score, the
//! general/metamorphic vote used for data filtering, and rubric grading of
//! uniformly sampled frames by a multimodal LLM.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{RubricQuery, RubricScorer};
use crate::frames::{Frame, FrameSequence, PLANAR_EXTENSION};
use crate::pool::parallel_map;
use crate::protocol::ProtocolError;
use crate::scalar::Scalar;
use crate::types::RetrievalProfile;

/// The ten retrieval sentences. Indices 0..5 describe general videos,
/// 5..10 time-lapse videos. Any byte change alters retrieval probabilities.
pub const RETRIEVAL_SENTENCES: [&str; 10] = [
    "A conventional video, not a time-condensed video.",
    "A usual video, not an accelerated video sequence.",
    "A normal video, not a time-lapse video.",
    "A standard video, not a time-lapse.",
    "An ordinary video, different from a fast-motion video.",
    "A time-lapse video, distinct from a regular recording.",
    "A time-lapse footage, not your typical video.",
    "A fast-motion video, unlike a standard video.",
    "A time-condensed video, not a conventional video.",
    "An accelerated video sequence, not a usual video.",
];

/// Five-level change rubric, level 1 first.
pub const RUBRIC_LEVELS: [&str; 5] = [
    "Minimal change. The scene appears almost like a still image, with static elements remaining motionless and only minor changes in lighting or subtle movements of elements. No significant activity is noticeable.",
    "Slight change. There is a small amount of movement or change in the elements of the scene, such as a few people or vehicles moving and minor changes in light or shadows. The overall variation is still minimal, with changes mostly being quantitative.",
    "Moderate change. Multiple elements in the scene undergo changes, but the overall pace is slow. This includes gradual changes in daylight, moving clouds, growing plants, or occasional vehicle and pedestrian movements. The scene begins to show a transition from quantitative to qualitative change.",
    "Significant change. The elements in the scene show obvious dynamic changes with a higher speed and frequency of variation. This includes noticeable changes in city traffic, crowd activities, or significant weather transitions. The scene displays a mix of quantitative and qualitative changes.",
    "Dramatic change. Elements in the scene undergo continuous and rapid significant changes, creating a very rich visual effect. This includes events like sunrise and sunset, construction of buildings, and seasonal changes, making the variation process vivid and impactful. The scene exhibits clear qualitative change.",
];

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalSentenceSet {
    pub general: [&'static str; 5],
    pub metamorphic: [&'static str; 5],
}

impl RetrievalSentenceSet {
    pub fn canonical() -> Self {
        let mut general = [""; 5];
        let mut metamorphic = [""; 5];
        general.copy_from_slice(&RETRIEVAL_SENTENCES[..5]);
        metamorphic.copy_from_slice(&RETRIEVAL_SENTENCES[5..]);
        Self { general, metamorphic }
    }

    /// Sentences in table order.
    pub fn all(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.general.iter().chain(self.metamorphic.iter()).copied()
    }

    /// SHA-256 (hex) over the sentences joined with `\n`.
    pub fn checksum(&self) -> String {
        sha256_hex(self.all().collect::<Vec<_>>().join("\n").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rubric {
    levels: BTreeMap<u8, &'static str>,
}

impl Rubric {
    pub fn canonical() -> Self {
        Self {
            levels: (1u8..).zip(RUBRIC_LEVELS).collect(),
        }
    }

    pub fn level(&self, score: u8) -> Option<&'static str> {
        self.levels.get(&score).copied()
    }

    pub fn levels(&self) -> impl Iterator<Item = (u8, &'static str)> + '_ {
        self.levels.iter().map(|(&k, &v)| (k, v))
    }

    /// SHA-256 (hex) over lines `"<score>: <criterion>"` joined with `\n`.
    pub fn checksum(&self) -> String {
        sha256_hex(self.criteria_text().as_bytes())
    }

    fn criteria_text(&self) -> String {
        self.levels()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Instruction sent to the LLM together with the sampled frames.
    pub fn prompt(&self, sample_count: usize) -> String {
        format!(
            "You are shown {sample_count} frames sampled uniformly from one video, in temporal order. \
             Rate how much the scene changes over the course of the video using this scale:\n{}\n\
             Answer with a single integer from 1 to 5.",
            self.criteria_text()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedAggregation {
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GPTScoreConfig {
    /// Frames sampled per video.
    pub sample_count: usize,
    /// Additional attempts after an unparseable reply or a timeout.
    pub max_retries: usize,
    /// Cap on concurrent backend requests in batch evaluation.
    pub max_in_flight: usize,
    pub aggregation: SeedAggregation,
}

impl Default for GPTScoreConfig {
    fn default() -> Self {
        Self {
            sample_count: 8,
            max_retries: 2,
            max_in_flight: 4,
            aggregation: SeedAggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MtScoreError {
    #[error("degenerate retrieval profile: all probabilities are zero")]
    DegenerateProfile,
    #[error("retrieval profile is not normalized (sums to {0}); normalize probabilities across all ten sentences before voting")]
    NotNormalized(f64),
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("sample count must be at least 2, got {0}")]
    SampleCount(usize),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GptScoreError {
    #[error(transparent)]
    Input(#[from] MtScoreError),
    #[error("no score in backend reply after {attempts} attempts; last reply: {last_reply:?}")]
    Unparseable { attempts: usize, last_reply: String },
    #[error("rubric violation: reply scored {0}, expected 1..=5")]
    RubricViolation(u64),
    #[error("cannot decode video: {0}")]
    Video(String),
    #[error(transparent)]
    Backend(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VideoClass {
    General,
    Metamorphic,
}

/// Share of retrieval mass on the metamorphic sentences.
///
/// Only the smaller side is divided; the larger one is its complement. This
/// makes swapping the two sentence groups give `1 - s` bit for bit:
/// `r + fl(1 - r)` rounds to exactly one for any `r` in `[0, 0.5]`.
pub fn mtscore_coarse<T: Scalar>(profile: &RetrievalProfile<T>) -> Result<T, MtScoreError> {
    let meta = profile.meta_total();
    let general = profile.gen_total();
    let total = meta + general;
    if total <= T::zero() {
        return Err(MtScoreError::DegenerateProfile);
    }
    Ok(if meta <= general {
        meta / total
    } else {
        T::one() - general / total
    })
}

/// General when the general sentences hold more than half the (normalized)
/// mass, metamorphic otherwise.
pub fn classify_video<T: Scalar>(profile: &RetrievalProfile<T>) -> Result<VideoClass, MtScoreError> {
    if !profile.is_normalized() {
        let total = profile.meta_total() + profile.gen_total();
        return Err(MtScoreError::NotNormalized(total.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(if profile.gen_total() > T::lit(0.5) {
        VideoClass::General
    } else {
        VideoClass::Metamorphic
    })
}

/// `count` indices spread evenly over `frame_count` frames, both ends
/// included: `round(k * (frame_count - 1) / (count - 1))`, halves rounded up.
/// Short videos yield every frame once.
pub fn sample_frames_uniform(frame_count: usize, count: usize) -> Result<Vec<usize>, MtScoreError> {
    if frame_count == 0 {
        return Err(MtScoreError::NoFrames);
    }
    if count < 2 {
        return Err(MtScoreError::SampleCount(count));
    }
    if frame_count <= count {
        return Ok((0..frame_count).collect());
    }
    let span = frame_count - 1;
    let steps = count - 1;
    Ok((0..count).map(|k| (2 * k * span + steps) / (2 * steps)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplyError {
    NoInteger,
    OutOfRange(u64),
}

/// The first run of ASCII digits in `reply`, which must lie in 1..=5.
pub fn parse_rubric_reply(reply: &str) -> Result<u8, ReplyError> {
    let start = reply.find(|c: char| c.is_ascii_digit()).ok_or(ReplyError::NoInteger)?;
    let digits: String = reply[start..].chars().take_while(char::is_ascii_digit).collect();
    match digits.parse::<u64>() {
        Ok(n @ 1..=5) => Ok(n as u8),
        Ok(n) => Err(ReplyError::OutOfRange(n)),
        Err(_) => Err(ReplyError::OutOfRange(u64::MAX)),
    }
}

/// Sends `query` to the backend, retrying on unparseable replies and timeouts.
pub fn score_rubric_query(
    query: &RubricQuery,
    cfg: &GPTScoreConfig,
    backend: &dyn RubricScorer,
) -> Result<u8, GptScoreError> {
    let attempts = cfg.max_retries + 1;
    let mut last = None;
    for _ in 0..attempts {
        match backend.rubric_reply(query) {
            Ok(reply) => match parse_rubric_reply(&reply) {
                Ok(score) => return Ok(score),
                Err(ReplyError::OutOfRange(n)) => return Err(GptScoreError::RubricViolation(n)),
                Err(ReplyError::NoInteger) => {
                    last = Some(GptScoreError::Unparseable {
                        attempts,
                        last_reply: reply,
                    })
                }
            },
            Err(e @ ProtocolError::Timeout { .. }) => last = Some(GptScoreError::Backend(e)),
            Err(e) => return Err(GptScoreError::Backend(e)),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Grades one video's frames on the five-level rubric.
pub fn gpt_mtscore(
    frames: &[Frame],
    rubric: &Rubric,
    cfg: &GPTScoreConfig,
    backend: &dyn RubricScorer,
) -> Result<u8, GptScoreError> {
    let indices = sample_frames_uniform(frames.len(), cfg.sample_count)?;
    let query = RubricQuery {
        frames: indices.iter().map(|&i| frames[i].clone()).collect(),
        video: None,
        frame_indices: indices,
        sample_count: cfg.sample_count,
        prompt: rubric.prompt(cfg.sample_count),
    };
    score_rubric_query(&query, cfg, backend)
}

/// Grades many videos with at most `cfg.max_in_flight` concurrent requests.
pub fn gpt_mtscore_batch(
    videos: &[FrameSequence],
    rubric: &Rubric,
    cfg: &GPTScoreConfig,
    backend: &dyn RubricScorer,
) -> Vec<Result<u8, GptScoreError>> {
    parallel_map(videos, cfg.max_in_flight, |seq| {
        gpt_mtscore(seq.frames(), rubric, cfg, backend)
    })
}

/// Grades a video on disk. Planar `.frames` files and image directories are
/// decoded and sampled locally; any other path is handed to the adapter,
/// which then samples the frames itself.
pub fn gpt_mtscore_path(
    video: &Path,
    rubric: &Rubric,
    cfg: &GPTScoreConfig,
    backend: &dyn RubricScorer,
) -> Result<u8, GptScoreError> {
    if video.is_dir() || video.extension().is_some_and(|e| e == PLANAR_EXTENSION) {
        let seq = FrameSequence::open(video).map_err(|e| GptScoreError::Video(format!("{}: {e}", video.display())))?;
        return gpt_mtscore(seq.frames(), rubric, cfg, backend);
    }
    let query = RubricQuery {
        frames: Vec::new(),
        video: Some(video.to_string_lossy().into_owned()),
        frame_indices: Vec::new(),
        sample_count: cfg.sample_count,
        prompt: rubric.prompt(cfg.sample_count),
    };
    score_rubric_query(&query, cfg, backend)
}

/// Combines per-seed rubric scores of one prompt.
pub fn aggregate_seeds(scores: &[u8], aggregation: SeedAggregation) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    match aggregation {
        SeedAggregation::Mean => Some(scores.iter().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    fn profile(meta: &[f64], gen: &[f64]) -> RetrievalProfile<f64> {
        RetrievalProfile::new(meta.to_vec(), gen.to_vec()).unwrap()
    }

    #[test]
    fn coarse_score_examples() {
        assert_eq!(mtscore_coarse(&profile(&[0.1; 5], &[0.1; 5])).unwrap(), 0.5);
        let s = mtscore_coarse(&profile(&[0.2, 0.1, 0.05, 0.03, 0.02], &[0.02; 5])).unwrap();
        assert!((s - 0.8).abs() < 1e-12);
        assert_eq!(
            mtscore_coarse(&profile(&[0.0; 5], &[0.0; 5])),
            Err(MtScoreError::DegenerateProfile)
        );
    }

    #[test]
    fn voting_rule() {
        let general = profile(&[0.08; 5], &[0.12; 5]);
        assert_eq!(classify_video(&general).unwrap(), VideoClass::General);
        let meta = profile(&[0.12; 5], &[0.08; 5]);
        assert_eq!(classify_video(&meta).unwrap(), VideoClass::Metamorphic);
        let tie = profile(&[0.1; 5], &[0.1; 5]);
        assert_eq!(classify_video(&tie).unwrap(), VideoClass::Metamorphic);
        let raw = profile(&[0.5; 5], &[0.5; 5]);
        assert!(matches!(classify_video(&raw), Err(MtScoreError::NotNormalized(_))));
    }

    #[test]
    fn uniform_sampling() {
        assert_eq!(sample_frames_uniform(10, 10).unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(sample_frames_uniform(100, 5).unwrap(), vec![0, 25, 50, 74, 99]);
        assert_eq!(sample_frames_uniform(3, 8).unwrap(), vec![0, 1, 2]);
        assert_eq!(
            sample_frames_uniform(100, 8).unwrap(),
            vec![0, 14, 28, 42, 57, 71, 85, 99]
        );
        assert_eq!(sample_frames_uniform(0, 8), Err(MtScoreError::NoFrames));
        assert_eq!(sample_frames_uniform(5, 1), Err(MtScoreError::SampleCount(1)));
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_rubric_reply("3"), Ok(3));
        assert_eq!(parse_rubric_reply("Score: 4 — significant change."), Ok(4));
        assert_eq!(parse_rubric_reply("6"), Err(ReplyError::OutOfRange(6)));
        assert_eq!(parse_rubric_reply("0 stars"), Err(ReplyError::OutOfRange(0)));
        assert_eq!(parse_rubric_reply("excellent"), Err(ReplyError::NoInteger));
    }

    #[test]
    fn canonical_tables() {
        let s = RetrievalSentenceSet::canonical();
        assert_eq!(s.general[2], "A normal video, not a time-lapse video.");
        assert_eq!(s.metamorphic[4], "An accelerated video sequence, not a usual video.");
        let r = Rubric::canonical();
        assert_eq!(r.levels().map(|(k, _)| k).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert!(r.level(1).unwrap().starts_with("Minimal change."));
        assert!(r.level(5).unwrap().starts_with("Dramatic change."));
        assert!(r.level(6).is_none());
        let prompt = r.prompt(8);
        assert!(prompt.contains("8 frames") && prompt.contains("3: Moderate change."));
    }

    struct Scripted {
        replies: Mutex<Vec<Result<String, ProtocolError>>>,
        calls: Mutex<usize>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<String, ProtocolError>>) -> Self {
            replies.reverse();
            Self {
                replies: Mutex::new(replies),
                calls: Mutex::new(0),
            }
        }
    }

    impl RubricScorer for Scripted {
        fn rubric_reply(&self, _q: &RubricQuery) -> Result<String, ProtocolError> {
            *self.calls.lock().unwrap() += 1;
            self.replies.lock().unwrap().pop().unwrap_or(Err(ProtocolError::Closed))
        }
    }

    fn timeout() -> ProtocolError {
        ProtocolError::Timeout {
            request_id: "r".into(),
            millis: 10,
        }
    }

    fn frames(n: usize) -> Vec<Frame> {
        (0..n).map(|i| Frame::filled(1, 1, 1, i as u8).unwrap()).collect()
    }

    #[test]
    fn scores_direct_reply() {
        let b = Scripted::new(vec![Ok("3".into())]);
        let cfg = GPTScoreConfig::default();
        assert_eq!(gpt_mtscore(&frames(20), &Rubric::canonical(), &cfg, &b), Ok(3));
    }

    #[test]
    fn retries_then_fails_on_timeout() {
        let b = Scripted::new(vec![Ok("excellent".into()), Ok("excellent".into()), Err(timeout())]);
        let cfg = GPTScoreConfig::default();
        let err = gpt_mtscore(&frames(20), &Rubric::canonical(), &cfg, &b).unwrap_err();
        assert!(matches!(err, GptScoreError::Backend(ProtocolError::Timeout { .. })));
        assert_eq!(*b.calls.lock().unwrap(), 3);
    }

    #[test]
    fn retry_recovers_and_violation_is_fatal() {
        let cfg = GPTScoreConfig::default();
        let b = Scripted::new(vec![Ok("hmm".into()), Ok("Score: 4".into())]);
        assert_eq!(gpt_mtscore(&frames(5), &Rubric::canonical(), &cfg, &b), Ok(4));
        let b = Scripted::new(vec![Ok("6".into()), Ok("2".into())]);
        assert_eq!(
            gpt_mtscore(&frames(5), &Rubric::canonical(), &cfg, &b),
            Err(GptScoreError::RubricViolation(6))
        );
        assert_eq!(*b.calls.lock().unwrap(), 1);
        let b = Scripted::new(vec![Ok("no".into()); 3]);
        assert!(matches!(
            gpt_mtscore(&frames(5), &Rubric::canonical(), &cfg, &b),
            Err(GptScoreError::Unparseable { attempts: 3, .. })
        ));
        assert!(matches!(
            gpt_mtscore(&[], &Rubric::canonical(), &cfg, &b),
            Err(GptScoreError::Input(MtScoreError::NoFrames))
        ));
    }

    struct EchoCount;

    impl RubricScorer for EchoCount {
        fn rubric_reply(&self, q: &RubricQuery) -> Result<String, ProtocolError> {
            Ok(format!("{}", q.frames.len().min(5)))
        }
    }

    #[test]
    fn batch_keeps_order() {
        let videos: Vec<FrameSequence> = (1..=6).map(|n| FrameSequence::new(frames(n)).unwrap()).collect();
        let cfg = GPTScoreConfig {
            sample_count: 3,
            ..Default::default()
        };
        let out = gpt_mtscore_batch(&videos, &Rubric::canonical(), &cfg, &EchoCount);
        let scores: Vec<u8> = out.into_iter().map(Result::unwrap).collect();
        assert_eq!(scores, vec![1, 2, 3, 3, 3, 3]);
        assert_eq!(aggregate_seeds(&[2, 3, 4], SeedAggregation::Mean), Some(3.0));
        assert_eq!(aggregate_seeds(&[], SeedAggregation::Mean), None);
    }
}
