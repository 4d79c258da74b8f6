//! Model-hosting backends the metrics depend on.
//!
//! The neural models (point tracker, video-text retrieval, captioner, LLM)
//! live behind these traits. [`crate::protocol::RemoteBackend`] implements all
//! of them over the wire protocol; tests plug in scripted implementations.

use crate::frames::Frame;
use crate::protocol::ProtocolError;
use crate::types::{RetrievalPayload, VisibilityMatrix};

pub trait Tracker: Send + Sync {
    fn track(&self, video: &str, grid_size: usize) -> Result<VisibilityMatrix, ProtocolError>;
}

pub trait Retriever: Send + Sync {
    /// Probabilities for the ten canonical sentences, in table order.
    fn retrieve(&self, video: &str) -> Result<RetrievalPayload, ProtocolError>;
}

/// Frames (or a video reference) to be graded against the change rubric.
#[derive(Debug, Clone)]
pub struct RubricQuery {
    /// Sampled frames; empty when the backend decodes `video` itself.
    pub frames: Vec<Frame>,
    pub video: Option<String>,
    /// Indices of `frames` in the source video; empty when unknown.
    pub frame_indices: Vec<usize>,
    pub sample_count: usize,
    pub prompt: String,
}

pub trait RubricScorer: Send + Sync {
    /// Returns the raw reply text.
    fn rubric_reply(&self, query: &RubricQuery) -> Result<String, ProtocolError>;
}

#[derive(Debug, Clone)]
pub struct FrameCaptionQuery {
    pub frame: Frame,
    /// Index of the frame within its clip.
    pub position: usize,
    pub frame_count: usize,
}

pub trait Captioner: Send + Sync {
    fn describe_frame(&self, query: &FrameCaptionQuery) -> Result<String, ProtocolError>;
}

#[derive(Debug, Clone)]
pub struct SummaryQuery {
    pub frame_count: usize,
    /// `(position, caption)` pairs in temporal order.
    pub captions: Vec<(usize, String)>,
    pub prompt: String,
}

pub trait Summarizer: Send + Sync {
    fn summarize(&self, query: &SummaryQuery) -> Result<String, ProtocolError>;
}
