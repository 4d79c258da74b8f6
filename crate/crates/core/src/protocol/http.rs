use std::time::Duration;

use super::{Endpoint, ProtocolError};
use crate::pool::Semaphore;

/// Adapter reachable by HTTP POST of the request JSON.
pub struct HttpEndpoint {
    url: String,
    bearer_token: Option<String>,
    agent: ureq::Agent,
    permits: Semaphore,
}

impl HttpEndpoint {
    pub fn new(url: String, bearer_token: Option<String>, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            url,
            bearer_token,
            agent,
            permits: Semaphore::new(max_in_flight),
        }
    }
}

impl Endpoint for HttpEndpoint {
    fn exchange(&self, request_id: &str, request: &[u8], deadline: Duration) -> Result<Vec<u8>, ProtocolError> {
        let _permit = self.permits.acquire();
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(token) = &self.bearer_token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let result = req.config().timeout_global(Some(deadline)).build().send(request);
        let timeout = || ProtocolError::Timeout {
            request_id: request_id.to_string(),
            millis: deadline.as_millis() as u64,
        };
        let mut resp = match result {
            Ok(resp) => resp,
            Err(ureq::Error::Timeout(_)) => return Err(timeout()),
            Err(e) => return Err(ProtocolError::Unreachable(e.to_string())),
        };
        let status = resp.status();
        let body = resp.body_mut().read_to_vec().map_err(|e| match e {
            ureq::Error::Timeout(_) => timeout(),
            e => ProtocolError::Framing(e.to_string()),
        })?;
        if !status.is_success() {
            // Adapters may report protocol-level errors with a non-2xx status;
            // a JSON response body still carries the typed error.
            if serde_json::from_slice::<serde_json::Value>(&body).is_err() {
                return Err(ProtocolError::Unreachable(format!("HTTP {status}")));
            }
        }
        Ok(body)
    }
}
