//! Wire contract between the toolkit and model-hosting adapters.
//!
//! Every exchange is one JSON request answered by one JSON response carrying
//! the same `request_id`. Requests are self-contained, so any request can be
//! replayed. Two transports carry identical bodies:
//!
//! * stdio: the adapter runs as a subprocess; each message is framed as a
//!   4-byte big-endian length followed by that many bytes of UTF-8 JSON;
//! * HTTP: the request body is POSTed to the endpoint URL and the response
//!   body is the JSON response.
//!
//! Requests for retrieval and rubric grading carry the SHA-256 of the
//! canonical sentence/rubric text, and responses echo the adapter's own
//! checksum, so the two sides cannot silently disagree on metric definitions.

pub mod framing;
mod http;
mod remote;
mod stdio;
pub mod stub;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::frames::FramePayload;
use crate::mtscore::{RetrievalSentenceSet, Rubric};
use crate::types::{RetrievalPayload, VisibilityMatrix};

pub use self::http::HttpEndpoint;
pub use self::remote::RemoteBackend;
pub use self::stdio::StdioEndpoint;

/// Deadline applied when a caller does not pick one.
pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("request {request_id} timed out after {millis} ms")]
    Timeout { request_id: String, millis: u64 },
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("endpoint closed the connection")]
    Closed,
    #[error("framing error: {0}")]
    Framing(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("protocol error: response for `{got}` does not match request `{expected}`")]
    RequestIdMismatch { expected: String, got: String },
    #[error("checksum mismatch on {what}: expected {expected}, got {got}")]
    ChecksumMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("adapter error ({code}): {message}")]
    Remote { code: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Track,
    Retrieve,
    Caption,
    Rubric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPayload {
    pub video: String,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievePayload {
    pub video: String,
    pub sentences_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionedFrame {
    pub position: usize,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase", deny_unknown_fields)]
pub enum CaptionPayload {
    Describe {
        position: usize,
        frame_count: usize,
        frame: FramePayload,
    },
    Summarize {
        frame_count: usize,
        captions: Vec<CaptionedFrame>,
        prompt: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricPayload {
    pub rubric_checksum: String,
    pub prompt: String,
    pub sample_count: usize,
    pub frame_indices: Vec<usize>,
    pub frames: Vec<FramePayload>,
    pub video: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum RequestPayload {
    Track(TrackPayload),
    Retrieve(RetrievePayload),
    Caption(CaptionPayload),
    Rubric(RubricPayload),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub request_id: String,
    #[serde(flatten)]
    pub payload: RequestPayload,
}

impl BackendRequest {
    pub fn new(request_id: impl Into<String>, payload: RequestPayload) -> Self {
        Self {
            request_id: request_id.into(),
            payload,
        }
    }

    pub fn kind(&self) -> RequestKind {
        match self.payload {
            RequestPayload::Track(_) => RequestKind::Track,
            RequestPayload::Retrieve(_) => RequestKind::Retrieve,
            RequestPayload::Caption(_) => RequestKind::Caption,
            RequestPayload::Rubric(_) => RequestKind::Rubric,
        }
    }

    /// Checks the kind-specific invariants serde cannot express.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let schema = |msg: &str| Err(ProtocolError::Schema(msg.to_string()));
        if self.request_id.is_empty() {
            return schema("empty request_id");
        }
        match &self.payload {
            RequestPayload::Track(p) if p.grid_size == 0 => schema("track: grid_size must be positive"),
            RequestPayload::Track(p) if p.video.is_empty() => schema("track: empty video"),
            RequestPayload::Retrieve(p) if p.video.is_empty() => schema("retrieve: empty video"),
            RequestPayload::Rubric(p) if p.frames.is_empty() && p.video.is_none() => {
                schema("rubric: needs frames or a video")
            }
            RequestPayload::Rubric(p) if !p.frames.is_empty() && p.frames.len() != p.frame_indices.len() => {
                schema("rubric: frame_indices must index every frame")
            }
            RequestPayload::Caption(CaptionPayload::Summarize { captions, .. }) if captions.is_empty() => {
                schema("caption: nothing to summarize")
            }
            _ => Ok(()),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("request serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let req: Self = serde_json::from_slice(bytes).map_err(|e| ProtocolError::Schema(e.to_string()))?;
        req.validate()?;
        Ok(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

/// Adapter error codes with a meaning on the core side.
pub mod error_code {
    pub const CHECKSUM_MISMATCH: &str = "checksum_mismatch";
    pub const BAD_REQUEST: &str = "bad_request";
    pub const INFERENCE_FAILED: &str = "inference_failed";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub request_id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
}

impl BackendResponse {
    pub fn ok(request_id: impl Into<String>, body: Value) -> Self {
        Self {
            request_id: request_id.into(),
            status: Status::Ok,
            body: Some(body),
            error_code: None,
            error_message: None,
        }
    }

    pub fn error(request_id: impl Into<String>, code: &str, message: impl Into<String>) -> Self {
        Self {
            request_id: request_id.into(),
            status: Status::Error,
            body: None,
            error_code: Some(code.to_string()),
            error_message: Some(message.into()),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("response serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        serde_json::from_slice(bytes).map_err(|e| ProtocolError::Schema(format!("response: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieveBody {
    pub sentence_probs: Vec<f64>,
    pub sentences_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextBody {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricBody {
    pub reply: String,
    pub rubric_checksum: String,
}

/// A response body that passed its kind's schema.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseBody {
    Track(VisibilityMatrix),
    Retrieve(RetrievalPayload),
    Caption(String),
    Rubric(String),
}

/// Validates an ok response body against the schema for `kind`.
pub fn validate_body(kind: RequestKind, body: &Value) -> Result<ResponseBody, ProtocolError> {
    let schema = |e: &dyn std::fmt::Display| ProtocolError::Schema(format!("{kind:?} body: {e}"));
    match kind {
        RequestKind::Track => VisibilityMatrix::from_value(body)
            .map(ResponseBody::Track)
            .map_err(|e| schema(&e)),
        RequestKind::Retrieve => {
            let b: RetrieveBody = serde_json::from_value(body.clone()).map_err(|e| schema(&e))?;
            let expected = RetrievalSentenceSet::canonical().checksum();
            if b.sentences_checksum != expected {
                return Err(ProtocolError::ChecksumMismatch {
                    what: "retrieval sentences",
                    expected,
                    got: b.sentences_checksum,
                });
            }
            let payload = RetrievalPayload {
                sentence_probs: b.sentence_probs,
            };
            crate::types::RetrievalProfile::<f64>::from_payload(&payload).map_err(|e| schema(&e))?;
            Ok(ResponseBody::Retrieve(payload))
        }
        RequestKind::Caption => {
            let b: TextBody = serde_json::from_value(body.clone()).map_err(|e| schema(&e))?;
            Ok(ResponseBody::Caption(b.text))
        }
        RequestKind::Rubric => {
            let b: RubricBody = serde_json::from_value(body.clone()).map_err(|e| schema(&e))?;
            let expected = Rubric::canonical().checksum();
            if b.rubric_checksum != expected {
                return Err(ProtocolError::ChecksumMismatch {
                    what: "rubric",
                    expected,
                    got: b.rubric_checksum,
                });
            }
            Ok(ResponseBody::Rubric(b.reply))
        }
    }
}

/// A transport that delivers one request and returns the raw response bytes.
pub trait Endpoint: Send + Sync {
    fn exchange(&self, request_id: &str, request: &[u8], deadline: Duration) -> Result<Vec<u8>, ProtocolError>;
}

/// A validated exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub response: BackendResponse,
    pub body: ResponseBody,
}

/// Sends `request` and validates the reply: matching id, ok status and a
/// body that satisfies the request kind's schema and checksums.
pub fn roundtrip(
    request: &BackendRequest,
    endpoint: &dyn Endpoint,
    deadline: Duration,
) -> Result<Exchange, ProtocolError> {
    request.validate()?;
    let raw = endpoint.exchange(&request.request_id, &request.to_bytes(), deadline)?;
    let response = BackendResponse::from_bytes(&raw)?;
    if response.request_id != request.request_id {
        return Err(ProtocolError::RequestIdMismatch {
            expected: request.request_id.clone(),
            got: response.request_id,
        });
    }
    match response.status {
        Status::Error => {
            let code = response.error_code.clone().unwrap_or_else(|| "unknown".into());
            let message = response.error_message.clone().unwrap_or_default();
            if code == error_code::CHECKSUM_MISMATCH {
                let (what, expected) = match request.kind() {
                    RequestKind::Rubric => ("rubric", Rubric::canonical().checksum()),
                    _ => ("retrieval sentences", RetrievalSentenceSet::canonical().checksum()),
                };
                return Err(ProtocolError::ChecksumMismatch {
                    what,
                    expected,
                    got: message,
                });
            }
            Err(ProtocolError::Remote { code, message })
        }
        Status::Ok => {
            let body = response
                .body
                .as_ref()
                .ok_or_else(|| ProtocolError::Schema("ok response without body".into()))?;
            let body = validate_body(request.kind(), body)?;
            Ok(Exchange { response, body })
        }
    }
}

/// Where an adapter lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "lowercase")]
pub enum EndpointSpec {
    /// Subprocess speaking framed JSON on stdin/stdout.
    Stdio {
        program: String,
        args: Vec<String>,
    },
    Http {
        url: String,
        bearer_token: Option<String>,
    },
}

impl EndpointSpec {
    /// `stdio:<program> [args...]` (whitespace separated) or an `http(s)://` URL.
    pub fn parse(s: &str) -> Result<Self, ProtocolError> {
        let s = s.trim();
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let mut parts = cmd.split_whitespace().map(str::to_string);
            let program = parts
                .next()
                .ok_or_else(|| ProtocolError::Unreachable("empty stdio command".into()))?;
            Ok(Self::Stdio {
                program,
                args: parts.collect(),
            })
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Self::Http {
                url: s.to_string(),
                bearer_token: None,
            })
        } else {
            Err(ProtocolError::Unreachable(format!(
                "unrecognized endpoint `{s}` (expected stdio:<cmd> or http(s)://...)"
            )))
        }
    }

    pub fn connect(&self, max_in_flight: usize) -> Result<Arc<dyn Endpoint>, ProtocolError> {
        Ok(match self {
            Self::Stdio { program, args } => Arc::new(StdioEndpoint::spawn(program, args, max_in_flight)?),
            Self::Http { url, bearer_token } => {
                Arc::new(HttpEndpoint::new(url.clone(), bearer_token.clone(), max_in_flight))
            }
        })
    }
}

/// Calls a handler in-process; useful for tests and embedding.
pub struct InProcessEndpoint<F> {
    handler: F,
}

impl<F> InProcessEndpoint<F>
where
    F: Fn(&[u8]) -> Option<Vec<u8>> + Send + Sync,
{
    /// `handler` returns `None` to model an adapter that never answers.
    pub fn new(handler: F) -> Self {
        Self { handler }
    }
}

impl<F> Endpoint for InProcessEndpoint<F>
where
    F: Fn(&[u8]) -> Option<Vec<u8>> + Send + Sync,
{
    fn exchange(&self, request_id: &str, request: &[u8], deadline: Duration) -> Result<Vec<u8>, ProtocolError> {
        (self.handler)(request).ok_or_else(|| ProtocolError::Timeout {
            request_id: request_id.to_string(),
            millis: deadline.as_millis() as u64,
        })
    }
}
