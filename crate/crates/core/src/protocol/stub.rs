//! Deterministic stand-in adapter used by tests and the `stub-adapter` binary.
//!
//! Behaviour is steered by `key=value` segments in the request's video
//! reference (separated by `?`, `&` or `#`):
//!
//! * `hidden=0,1,3`: track returns one frame per entry, hiding that many points;
//!   without it, track returns two fully visible frames;
//! * `meta=0.7`: retrieve puts 0.7 of the mass on the metamorphic sentences
//!   (default 0.5), spread evenly, so profiles are normalized;
//! * `reply=<text>`: the rubric reply (default `3`);
//! * the literal `stub:hang` never answers and `stub:fail` answers with an
//!   inference error.

use serde_json::json;

use super::{error_code, BackendRequest, BackendResponse, CaptionPayload, ProtocolError, RequestPayload};
use crate::mtscore::{RetrievalSentenceSet, Rubric};

fn option<'a>(video: &'a str, key: &str) -> Option<&'a str> {
    video
        .split(['?', '&', '#'])
        .find_map(|seg| seg.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
}

/// Answers one framed request body. `None` means the adapter stays silent.
pub fn respond(request: &[u8]) -> Option<Vec<u8>> {
    let req = match BackendRequest::from_bytes(request) {
        Ok(req) => req,
        Err(e) => {
            let id = serde_json::from_slice::<serde_json::Value>(request)
                .ok()
                .and_then(|v| v.get("request_id").and_then(|id| id.as_str()).map(str::to_string))
                .unwrap_or_default();
            let msg = match e {
                ProtocolError::Schema(m) => m,
                other => other.to_string(),
            };
            return Some(BackendResponse::error(id, error_code::BAD_REQUEST, msg).to_bytes());
        }
    };
    answer(&req).map(|r| r.to_bytes())
}

pub fn answer(req: &BackendRequest) -> Option<BackendResponse> {
    let id = req.request_id.as_str();
    let video = match &req.payload {
        RequestPayload::Track(p) => Some(p.video.as_str()),
        RequestPayload::Retrieve(p) => Some(p.video.as_str()),
        RequestPayload::Rubric(p) => p.video.as_deref(),
        RequestPayload::Caption(_) => None,
    }
    .unwrap_or("");
    if video.contains("stub:hang") {
        return None;
    }
    if video.contains("stub:fail") {
        return Some(BackendResponse::error(
            id,
            error_code::INFERENCE_FAILED,
            "stub failure requested",
        ));
    }

    let response = match &req.payload {
        RequestPayload::Track(p) => {
            let points = p.grid_size * p.grid_size;
            let hidden: Vec<usize> = match option(video, "hidden") {
                Some(list) => match list.split(',').map(str::parse).collect::<Result<_, _>>() {
                    Ok(h) => h,
                    Err(_) => return Some(BackendResponse::error(id, error_code::BAD_REQUEST, "bad hidden list")),
                },
                None => vec![0, 0],
            };
            let vis: Vec<Vec<bool>> = hidden
                .iter()
                .map(|&h| (0..points).map(|j| j >= h.min(points)).collect())
                .collect();
            BackendResponse::ok(
                id,
                json!({"frames": vis.len(), "points": points, "grid_size": p.grid_size, "vis": vis}),
            )
        }
        RequestPayload::Retrieve(p) => {
            let ours = RetrievalSentenceSet::canonical().checksum();
            if p.sentences_checksum != ours {
                return Some(BackendResponse::error(
                    id,
                    error_code::CHECKSUM_MISMATCH,
                    p.sentences_checksum.clone(),
                ));
            }
            let meta: f64 = option(video, "meta").and_then(|v| v.parse().ok()).unwrap_or(0.5);
            let meta = meta.clamp(0.0, 1.0);
            let probs: Vec<f64> = (0..10)
                .map(|i| if i < 5 { (1.0 - meta) / 5.0 } else { meta / 5.0 })
                .collect();
            BackendResponse::ok(id, json!({"sentence_probs": probs, "sentences_checksum": ours}))
        }
        RequestPayload::Caption(CaptionPayload::Describe { position, .. }) => {
            BackendResponse::ok(id, json!({"text": format!("frame {position}")}))
        }
        RequestPayload::Caption(CaptionPayload::Summarize { captions, .. }) => {
            let joined: Vec<String> = captions
                .iter()
                .map(|c| format!("{}: {}", c.position, c.caption))
                .collect();
            BackendResponse::ok(id, json!({"text": format!("summary of {}", joined.join("; "))}))
        }
        RequestPayload::Rubric(p) => {
            let ours = Rubric::canonical().checksum();
            if p.rubric_checksum != ours {
                return Some(BackendResponse::error(
                    id,
                    error_code::CHECKSUM_MISMATCH,
                    p.rubric_checksum.clone(),
                ));
            }
            let reply = option(video, "reply").unwrap_or("3");
            BackendResponse::ok(id, json!({"reply": reply, "rubric_checksum": ours}))
        }
    };
    Some(response)
}
