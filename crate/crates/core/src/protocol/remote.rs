use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::{
    roundtrip, BackendRequest, CaptionPayload, CaptionedFrame, Endpoint, ProtocolError, RequestPayload, ResponseBody,
    RetrievePayload, RubricPayload, TrackPayload,
};
use crate::backend::{
    Captioner, FrameCaptionQuery, Retriever, RubricQuery, RubricScorer, Summarizer, SummaryQuery, Tracker,
};
use crate::mtscore::{RetrievalSentenceSet, Rubric};
use crate::types::{RetrievalPayload, VisibilityMatrix};

/// Implements every backend trait by sending protocol requests to one endpoint.
pub struct RemoteBackend {
    endpoint: Arc<dyn Endpoint>,
    deadline: Duration,
    prefix: String,
    next_id: AtomicU64,
}

impl RemoteBackend {
    pub fn new(endpoint: Arc<dyn Endpoint>, deadline: Duration) -> Self {
        Self {
            endpoint,
            deadline,
            prefix: "req".into(),
            next_id: AtomicU64::new(0),
        }
    }

    /// Request ids become `<prefix>-<n>`.
    pub fn with_id_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.prefix = prefix.into();
        self
    }

    fn call(&self, payload: RequestPayload) -> Result<ResponseBody, ProtocolError> {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let req = BackendRequest::new(format!("{}-{n}", self.prefix), payload);
        roundtrip(&req, self.endpoint.as_ref(), self.deadline).map(|ex| ex.body)
    }
}

fn unexpected(kind: &str) -> ProtocolError {
    ProtocolError::Schema(format!("expected a {kind} body"))
}

impl Tracker for RemoteBackend {
    fn track(&self, video: &str, grid_size: usize) -> Result<VisibilityMatrix, ProtocolError> {
        match self.call(RequestPayload::Track(TrackPayload {
            video: video.to_string(),
            grid_size,
        }))? {
            ResponseBody::Track(vis) => Ok(vis),
            _ => Err(unexpected("track")),
        }
    }
}

impl Retriever for RemoteBackend {
    fn retrieve(&self, video: &str) -> Result<RetrievalPayload, ProtocolError> {
        match self.call(RequestPayload::Retrieve(RetrievePayload {
            video: video.to_string(),
            sentences_checksum: RetrievalSentenceSet::canonical().checksum(),
        }))? {
            ResponseBody::Retrieve(p) => Ok(p),
            _ => Err(unexpected("retrieve")),
        }
    }
}

impl RubricScorer for RemoteBackend {
    fn rubric_reply(&self, q: &RubricQuery) -> Result<String, ProtocolError> {
        match self.call(RequestPayload::Rubric(RubricPayload {
            rubric_checksum: Rubric::canonical().checksum(),
            prompt: q.prompt.clone(),
            sample_count: q.sample_count,
            frame_indices: q.frame_indices.clone(),
            frames: q.frames.iter().map(|f| f.to_payload()).collect(),
            video: q.video.clone(),
        }))? {
            ResponseBody::Rubric(reply) => Ok(reply),
            _ => Err(unexpected("rubric")),
        }
    }
}

impl Captioner for RemoteBackend {
    fn describe_frame(&self, q: &FrameCaptionQuery) -> Result<String, ProtocolError> {
        match self.call(RequestPayload::Caption(CaptionPayload::Describe {
            position: q.position,
            frame_count: q.frame_count,
            frame: q.frame.to_payload(),
        }))? {
            ResponseBody::Caption(text) => Ok(text),
            _ => Err(unexpected("caption")),
        }
    }
}

impl Summarizer for RemoteBackend {
    fn summarize(&self, q: &SummaryQuery) -> Result<String, ProtocolError> {
        match self.call(RequestPayload::Caption(CaptionPayload::Summarize {
            frame_count: q.frame_count,
            captions: q
                .captions
                .iter()
                .map(|(position, caption)| CaptionedFrame {
                    position: *position,
                    caption: caption.clone(),
                })
                .collect(),
            prompt: q.prompt.clone(),
        }))? {
            ResponseBody::Caption(text) => Ok(text),
            _ => Err(unexpected("caption")),
        }
    }
}
