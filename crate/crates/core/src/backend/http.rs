use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{
    ChatRequest, ChatResponse, ErrorResponse, SegmentRequest, SegmentResponse, SimilarityRequest, SimilarityResponse,
    CHAT_RESPONSE_SCHEMA, SEGMENT_RESPONSE_SCHEMA, SIMILARITY_RESPONSE_SCHEMA,
};
use super::{BackendFault, FaultResult, ModelBackend};

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

/// JSON-over-HTTP backend. Each capability has its own endpoint URL.
pub struct HttpBackend {
    agent: ureq::Agent,
    chat_url: Option<String>,
    similarity_url: Option<String>,
    segment_url: Option<String>,
    bearer_token: Option<String>,
}

impl HttpBackend {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            chat_url: None,
            similarity_url: None,
            segment_url: None,
            bearer_token: None,
        }
    }

    /// All three endpoints under one base URL (`{base}/v1/chat`, ...).
    pub fn with_base_url(base: &str, timeout: Duration) -> Self {
        let base = base.trim_end_matches('/');
        Self::new(timeout)
            .chat_url(format!("{base}/v1/chat"))
            .similarity_url(format!("{base}/v1/similarity"))
            .segment_url(format!("{base}/v1/segment"))
    }

    pub fn chat_url(mut self, url: impl Into<String>) -> Self {
        self.chat_url = Some(url.into());
        self
    }

    pub fn similarity_url(mut self, url: impl Into<String>) -> Self {
        self.similarity_url = Some(url.into());
        self
    }

    pub fn segment_url(mut self, url: impl Into<String>) -> Self {
        self.segment_url = Some(url.into());
        self
    }

    pub fn bearer_token(mut self, token: impl Into<String>) -> Self {
        self.bearer_token = Some(token.into());
        self
    }

    fn post<Req: Serialize, Resp: DeserializeOwned + HasSchema>(
        &self,
        url: Option<&String>,
        body: &Req,
    ) -> FaultResult<Resp> {
        let url = url.ok_or_else(|| BackendFault::Rejected {
            code: "capability_unavailable".into(),
            message: "no endpoint configured".into(),
        })?;
        let payload = serde_json::to_vec(body).map_err(|e| BackendFault::Rejected {
            code: "encode".into(),
            message: e.to_string(),
        })?;
        let mut req = self.agent.post(url).header("content-type", "application/json");
        if let Some(tok) = &self.bearer_token {
            req = req.header("authorization", format!("Bearer {tok}"));
        }
        let mut resp = req
            .send(&payload[..])
            .map_err(|e| BackendFault::Transport(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_string()
            .map_err(|e| BackendFault::Transport(format!("{url}: reading body: {e}")))?;
        if !(200..300).contains(&status) {
            let parsed: Option<ErrorResponse> = serde_json::from_str(&text).ok();
            let (code, message, retryable) = match parsed {
                Some(e) => (e.error.code, e.error.message, e.error.retryable),
                None => (format!("http_{status}"), text, status >= 500 || status == 429),
            };
            return Err(if retryable {
                BackendFault::Transport(format!("{url}: {status} {code}: {message}"))
            } else {
                BackendFault::Rejected { code, message }
            });
        }
        let out: Resp = serde_json::from_str(&text).map_err(|e| BackendFault::Rejected {
            code: "bad_response".into(),
            message: format!("{url}: {e}"),
        })?;
        if out.schema() != Resp::EXPECTED {
            return Err(BackendFault::Rejected {
                code: "bad_schema".into(),
                message: format!("expected schema {}, got {}", Resp::EXPECTED, out.schema()),
            });
        }
        Ok(out)
    }
}

trait HasSchema {
    const EXPECTED: &'static str;
    fn schema(&self) -> &str;
}

impl HasSchema for ChatResponse {
    const EXPECTED: &'static str = CHAT_RESPONSE_SCHEMA;
    fn schema(&self) -> &str {
        &self.schema
    }
}

impl HasSchema for SimilarityResponse {
    const EXPECTED: &'static str = SIMILARITY_RESPONSE_SCHEMA;
    fn schema(&self) -> &str {
        &self.schema
    }
}

impl HasSchema for SegmentResponse {
    const EXPECTED: &'static str = SEGMENT_RESPONSE_SCHEMA;
    fn schema(&self) -> &str {
        &self.schema
    }
}

impl ModelBackend for HttpBackend {
    fn chat(&self, req: &ChatRequest) -> FaultResult<ChatResponse> {
        self.post(self.chat_url.as_ref(), req)
    }

    fn similarity(&self, req: &SimilarityRequest) -> FaultResult<SimilarityResponse> {
        self.post(self.similarity_url.as_ref(), req)
    }

    fn segment(&self, req: &SegmentRequest) -> FaultResult<SegmentResponse> {
        self.post(self.segment_url.as_ref(), req)
    }
}
