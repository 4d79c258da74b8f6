//! Time-lapse clip curation: cut raw videos at transitions, re-join clips
//! whose boundary embeddings are close, keep only clips the retrieval vote
//! calls metamorphic, and caption the survivors from sampled frames.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::backend::{Captioner, FrameCaptionQuery, Summarizer, SummaryQuery};
use crate::frames::{FrameError, FrameSequence};
use crate::mtscore::{classify_video, sample_frames_uniform, MtScoreError, VideoClass};
use crate::protocol::ProtocolError;
use crate::scalar::Scalar;
use crate::types::RetrievalProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    /// Cut threshold as a mean absolute difference per sample (0..=255 scale).
    pub tau_per_sample: f64,
    /// Merge threshold on the L2 distance between unit-normalized embeddings.
    pub eta: f64,
    /// Frames sampled per clip for captioning.
    pub caption_frames: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            tau_per_sample: 30.0,
            eta: 0.5,
            caption_frames: 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("need at least 2 frames to difference, got {0}")]
    TooFewFrames(usize),
    #[error("invalid clip boundary: {0}")]
    InvalidBoundary(String),
    #[error("missing {position:?} boundary feature for clip {clip}")]
    MissingFeature { clip: usize, position: FramePosition },
    #[error("feature for clip {0} is empty or not finite")]
    BadFeature(usize),
    #[error("feature dimensions differ: {0} vs {1}")]
    FeatureDim(usize, usize),
    #[error("{clips} clips but {profiles} retrieval profiles")]
    ProfileCount { clips: usize, profiles: usize },
    #[error("caption backend returned an empty caption")]
    EmptyCaption,
    #[error(transparent)]
    Vote(#[from] MtScoreError),
    #[error(transparent)]
    Frames(#[from] FrameError),
    #[error(transparent)]
    Backend(#[from] ProtocolError),
}

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub start: usize,
    pub end: usize,
}

impl Clip {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Ordered, non-overlapping, non-empty clips that exactly cover `[0, frame_count)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipBoundary {
    clips: Vec<Clip>,
}

impl ClipBoundary {
    pub fn new(clips: Vec<Clip>) -> Result<Self, CurationError> {
        let mut expected_start = 0;
        if clips.is_empty() {
            return Err(CurationError::InvalidBoundary("no clips".into()));
        }
        for (i, c) in clips.iter().enumerate() {
            if c.start != expected_start {
                return Err(CurationError::InvalidBoundary(format!(
                    "clip {i} starts at {} but previous clip ends at {expected_start}",
                    c.start
                )));
            }
            if c.end <= c.start {
                return Err(CurationError::InvalidBoundary(format!("clip {i} is empty")));
            }
            expected_start = c.end;
        }
        Ok(Self { clips })
    }

    /// A single clip spanning every frame.
    pub fn whole(frame_count: usize) -> Result<Self, CurationError> {
        Self::new(vec![Clip {
            start: 0,
            end: frame_count,
        }])
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    pub fn frame_count(&self) -> usize {
        self.clips.last().map_or(0, |c| c.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FramePosition {
    First,
    Last,
}

/// Embedding of a clip's first or last frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFeature<T> {
    pub clip_index: usize,
    pub frame_position: FramePosition,
    pub boundary_feature: Vec<T>,
}

/// Sum of absolute sample differences between each pair of adjacent frames,
/// over rows, columns and channels.
pub fn frame_diff_series<T: Scalar>(seq: &FrameSequence) -> Result<Vec<T>, CurationError> {
    if seq.len() < 2 {
        return Err(CurationError::TooFewFrames(seq.len()));
    }
    Ok(seq
        .frames()
        .windows(2)
        .map(|w| {
            let d: u64 = w[0]
                .data()
                .iter()
                .zip(w[1].data())
                .map(|(&a, &b)| u64::from(a.abs_diff(b)))
                .sum();
            <T as num_traits::FromPrimitive>::from_u64(d).expect("difference fits the scalar")
        })
        .collect())
}

/// Converts a per-sample threshold into one comparable with raw frame differences.
pub fn raw_threshold<T: Scalar>(tau_per_sample: T, shape: (usize, usize, usize)) -> T {
    let (h, w, c) = shape;
    tau_per_sample * T::from_count(h * w * c)
}

/// Cuts between frames `t` and `t + 1` wherever `diffs[t] > tau`.
pub fn split_on_transitions<T: Scalar>(diffs: &[T], tau: T) -> ClipBoundary {
    let frame_count = diffs.len() + 1;
    let mut clips = Vec::new();
    let mut start = 0;
    for (t, &d) in diffs.iter().enumerate() {
        if d > tau {
            clips.push(Clip { start, end: t + 1 });
            start = t + 1;
        }
    }
    clips.push(Clip {
        start,
        end: frame_count,
    });
    ClipBoundary { clips }
}

/// Frame differencing plus splitting, with `tau_per_sample` scaled to the frame shape.
pub fn split_sequence(seq: &FrameSequence, tau_per_sample: f64) -> Result<ClipBoundary, CurationError> {
    let diffs = frame_diff_series::<f64>(seq)?;
    Ok(split_on_transitions(&diffs, raw_threshold(tau_per_sample, seq.shape())))
}

fn l2_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Joins adjacent clips whose boundary embeddings are closer than `eta`.
///
/// Merging runs left to right and is transitive. A merged clip keeps the
/// right member's last-frame feature, so each adjacency is decided by the
/// distance between the original boundary frames on either side of it.
pub fn merge_similar_clips<T: Scalar>(
    boundary: &ClipBoundary,
    feats: &[ClipFeature<T>],
    eta: T,
) -> Result<ClipBoundary, CurationError> {
    let mut by_key: HashMap<(usize, FramePosition), &[T]> = HashMap::new();
    for f in feats {
        if f.boundary_feature.is_empty() || f.boundary_feature.iter().any(|v| !v.is_finite()) {
            return Err(CurationError::BadFeature(f.clip_index));
        }
        by_key.insert((f.clip_index, f.frame_position), &f.boundary_feature);
    }
    let lookup = |clip: usize, position: FramePosition| {
        by_key
            .get(&(clip, position))
            .copied()
            .ok_or(CurationError::MissingFeature { clip, position })
    };

    let clips = boundary.clips();
    let mut merged = vec![clips[0]];
    for i in 0..clips.len() - 1 {
        let left = lookup(i, FramePosition::Last)?;
        let right = lookup(i + 1, FramePosition::First)?;
        if left.len() != right.len() {
            return Err(CurationError::FeatureDim(left.len(), right.len()));
        }
        if l2_distance(left, right) < eta {
            merged.last_mut().expect("non-empty").end = clips[i + 1].end;
        } else {
            merged.push(clips[i + 1]);
        }
    }
    ClipBoundary::new(merged)
}

/// Keeps, in order, the clips whose profile votes metamorphic.
pub fn filter_metamorphic<C: Clone, T: Scalar>(
    clips: &[C],
    profiles: &[RetrievalProfile<T>],
) -> Result<Vec<C>, CurationError> {
    if clips.len() != profiles.len() {
        return Err(CurationError::ProfileCount {
            clips: clips.len(),
            profiles: profiles.len(),
        });
    }
    let mut kept = Vec::new();
    for (clip, profile) in clips.iter().zip(profiles) {
        if classify_video(profile)? == VideoClass::Metamorphic {
            kept.push(clip.clone());
        }
    }
    Ok(kept)
}

/// Instruction for the summarizer, listing each sampled frame's position and caption.
pub fn summary_prompt(frame_count: usize, captions: &[(usize, String)]) -> String {
    let mut prompt = format!(
        "The following are descriptions of {} frames sampled from a time-lapse video of {frame_count} frames, \
         in temporal order. Summarize how the content changes over time in one caption.\n",
        captions.len()
    );
    for (position, caption) in captions {
        prompt.push_str(&format!("Frame {position}: {caption}\n"));
    }
    prompt
}

/// Captions `n_frames` uniformly sampled frames, then asks for one summary
/// that accounts for where each frame sits in the clip.
pub fn caption_clip(
    seq: &FrameSequence,
    n_frames: usize,
    captioner: &dyn Captioner,
    summarizer: &dyn Summarizer,
) -> Result<String, CurationError> {
    let indices = sample_frames_uniform(seq.len(), n_frames)?;
    let mut captions = Vec::with_capacity(indices.len());
    for &position in &indices {
        let caption = captioner.describe_frame(&FrameCaptionQuery {
            frame: seq.frames()[position].clone(),
            position,
            frame_count: seq.len(),
        })?;
        if caption.trim().is_empty() {
            return Err(CurationError::EmptyCaption);
        }
        captions.push((position, caption));
    }
    let summary = summarizer.summarize(&SummaryQuery {
        frame_count: seq.len(),
        prompt: summary_prompt(seq.len(), &captions),
        captions,
    })?;
    if summary.trim().is_empty() {
        return Err(CurationError::EmptyCaption);
    }
    Ok(summary)
}
