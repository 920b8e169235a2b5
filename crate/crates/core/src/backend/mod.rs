//! Model backends: the wire protocol, protocol clients and scripted mocks.
//!
//! Every backend (HTTP or in-process mock) implements [`ModelBackend`].
//! Pipeline code never talks to a backend directly; it goes through
//! [`BackendClient`], which owns retries, reply parsing and validation, and
//! keeps a log of every exchange for the session transcript.

pub mod conformance;
pub mod http;
pub mod mock;
pub mod parse;
pub mod protocol;
pub mod server;

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video_io::Masklet;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockCall, MockScenario};
pub use parse::{
    extract_json, parse_reply, AttributeLevel, AttributeSpec, ExpressionBox, GeneratedQuestion, QaAnswer,
    QuestionKind, Reply,
};
pub use protocol::{
    fingerprint, AgentRole, ChatRequest, ChatResponse, RequestMeta, ResponseTag, SegmentRequest, SegmentResponse,
    SimilarityRequest, SimilarityResponse, WireImage, WireMasklet,
};
pub use server::BackendServer;

/// Failure reported by a backend transport.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendFault {
    /// Connection or server-side failure; the request may be retried.
    Transport(String),
    /// The backend understood the request and refused it.
    Rejected { code: String, message: String },
    /// A scripted backend has no answer for this request.
    ScriptedGap {
        tag: String,
        role: String,
        round: u32,
        fingerprint: String,
    },
}

impl BackendFault {
    fn into_error(self, attempts: u32) -> Error {
        match self {
            BackendFault::Transport(message) => Error::Transport { message, attempts },
            BackendFault::Rejected { code, message } => Error::Protocol(format!("{code}: {message}")),
            BackendFault::ScriptedGap {
                tag,
                role,
                round,
                fingerprint,
            } => Error::ScriptedGap {
                tag,
                role,
                round,
                fingerprint,
            },
        }
    }
}

pub type FaultResult<T> = std::result::Result<T, BackendFault>;

/// The three capabilities the engine needs from models.
pub trait ModelBackend: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> FaultResult<ChatResponse>;
    fn similarity(&self, req: &SimilarityRequest) -> FaultResult<SimilarityResponse>;
    fn segment(&self, req: &SegmentRequest) -> FaultResult<SegmentResponse>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_backoff() -> Self {
        Self {
            backoff_base: Duration::ZERO,
            ..Self::default()
        }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        self.backoff_base * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Chat,
    Similarity,
    Segment,
}

/// One logical client call (possibly several attempts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub endpoint: Endpoint,
    pub round: u32,
    pub role: AgentRole,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<ResponseTag>,
    pub fingerprint: String,
    pub retries: u32,
    pub ok: bool,
    /// Prompt text sent (chat only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_text: Option<String>,
    /// Raw reply text of the final attempt (chat only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_reply: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Successful chat call.
#[derive(Debug, Clone)]
pub struct ChatOutcome<T> {
    pub value: T,
    pub raw: String,
    pub retries: u32,
}

/// Protocol client shared by all pipeline stages.
#[derive(Clone)]
pub struct BackendClient {
    backend: Arc<dyn ModelBackend>,
    retry: RetryPolicy,
    log: Arc<Mutex<Vec<Exchange>>>,
}

impl BackendClient {
    pub fn new(backend: Arc<dyn ModelBackend>, retry: RetryPolicy) -> Self {
        Self {
            backend,
            retry,
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }

    /// Same backend, empty exchange log.
    pub fn fork(&self) -> Self {
        Self {
            backend: Arc::clone(&self.backend),
            retry: self.retry,
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        self.retry
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().expect("exchange log poisoned").clone()
    }

    fn record(&self, e: Exchange) {
        self.log.lock().expect("exchange log poisoned").push(e);
    }

    fn pause(&self, retry: u32) {
        let d = self.retry.delay(retry);
        if !d.is_zero() {
            thread::sleep(d);
        }
    }

    /// Sends `req`, parses the reply for its tag and validates it with
    /// `validate`. Transport failures and parse/validation failures are
    /// retried with the identical request; anything else fails immediately.
    pub fn chat_with<T>(
        &self,
        req: &ChatRequest,
        validate: impl Fn(Reply) -> std::result::Result<T, String>,
    ) -> Result<ChatOutcome<T>> {
        let fp = fingerprint(req);
        let tag = req.response_schema_tag;
        let attempts = self.retry.attempts.max(1);
        let mut last_raw = String::new();
        let mut last_reason = String::new();
        let mut transport_only = true;
        let mut last_transport = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                self.pause(attempt - 1);
            }
            match self.backend.chat(req) {
                Ok(resp) => {
                    transport_only = false;
                    match parse_reply(tag, &resp.text).and_then(&validate) {
                        Ok(value) => {
                            self.record(Exchange {
                                endpoint: Endpoint::Chat,
                                round: req.meta.round,
                                role: req.meta.role,
                                target: req.meta.target,
                                tag: Some(tag),
                                fingerprint: fp,
                                retries: attempt - 1,
                                ok: true,
                                user_text: Some(req.user_text.clone()),
                                raw_reply: Some(resp.text.clone()),
                                error: None,
                            });
                            return Ok(ChatOutcome {
                                value,
                                raw: resp.text,
                                retries: attempt - 1,
                            });
                        }
                        Err(reason) => {
                            log::warn!("{} reply rejected (attempt {attempt}): {reason}", tag);
                            last_raw = resp.text;
                            last_reason = reason;
                        }
                    }
                }
                Err(BackendFault::Transport(msg)) => {
                    log::warn!("chat transport failure (attempt {attempt}): {msg}");
                    last_transport = msg;
                }
                Err(fault) => {
                    let err = fault.into_error(attempt);
                    self.record_chat_failure(req, &fp, attempt - 1, &err);
                    return Err(err);
                }
            }
        }
        let err = if transport_only {
            Error::Transport {
                message: last_transport,
                attempts,
            }
        } else {
            Error::BackendParse {
                tag: tag.to_string(),
                reason: last_reason,
                raw: last_raw,
                attempts,
            }
        };
        self.record_chat_failure(req, &fp, attempts - 1, &err);
        Err(err)
    }

    fn record_chat_failure(&self, req: &ChatRequest, fp: &str, retries: u32, err: &Error) {
        let raw = match err {
            Error::BackendParse { raw, .. } => Some(raw.clone()),
            _ => None,
        };
        self.record(Exchange {
            endpoint: Endpoint::Chat,
            round: req.meta.round,
            role: req.meta.role,
            target: req.meta.target,
            tag: Some(req.response_schema_tag),
            fingerprint: fp.to_string(),
            retries,
            ok: false,
            user_text: Some(req.user_text.clone()),
            raw_reply: raw,
            error: Some(err.to_string()),
        });
    }

    /// Chat call without extra validation.
    pub fn chat(&self, req: &ChatRequest) -> Result<ChatOutcome<Reply>> {
        self.chat_with(req, Ok)
    }

    fn with_transport_retry<R>(
        &self,
        endpoint: Endpoint,
        meta: &RequestMeta,
        fp: &str,
        call: impl Fn() -> FaultResult<R>,
    ) -> Result<(R, u32)> {
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        let fail = |retries: u32, err: Error| {
            self.record(Exchange {
                endpoint,
                round: meta.round,
                role: meta.role,
                target: meta.target,
                tag: None,
                fingerprint: fp.to_string(),
                retries,
                ok: false,
                user_text: None,
                raw_reply: None,
                error: Some(err.to_string()),
            });
            err
        };
        for attempt in 1..=attempts {
            if attempt > 1 {
                self.pause(attempt - 1);
            }
            match call() {
                Ok(r) => return Ok((r, attempt - 1)),
                Err(BackendFault::Transport(msg)) => {
                    log::warn!("{endpoint:?} transport failure (attempt {attempt}): {msg}");
                    last = msg;
                }
                Err(fault) => return Err(fail(attempt - 1, fault.into_error(attempt))),
            }
        }
        Err(fail(
            attempts - 1,
            Error::Transport {
                message: last,
                attempts,
            },
        ))
    }

    fn record_ok(&self, endpoint: Endpoint, meta: &RequestMeta, fp: String, retries: u32) {
        self.record(Exchange {
            endpoint,
            round: meta.round,
            role: meta.role,
            target: meta.target,
            tag: None,
            fingerprint: fp,
            retries,
            ok: true,
            user_text: None,
            raw_reply: None,
            error: None,
        });
    }

    /// Raw text-image similarity, one score per image. No normalization.
    pub fn similarity(&self, req: &SimilarityRequest) -> Result<Vec<f64>> {
        if req.images.is_empty() {
            return Err(Error::InvalidInput("similarity needs at least one image".into()));
        }
        let fp = fingerprint(req);
        let (resp, retries) =
            self.with_transport_retry(Endpoint::Similarity, &req.meta, &fp, || self.backend.similarity(req))?;
        let checked = if resp.scores.len() != req.images.len() {
            Err(Error::Arity {
                expected: req.images.len(),
                got: resp.scores.len(),
            })
        } else if let Some(bad) = resp.scores.iter().find(|s| !s.is_finite()) {
            Err(Error::Protocol(format!("non-finite similarity score {bad}")))
        } else {
            Ok(())
        };
        match checked {
            Ok(()) => {
                self.record_ok(Endpoint::Similarity, &req.meta, fp, retries);
                Ok(resp.scores)
            }
            Err(e) => {
                self.record(Exchange {
                    endpoint: Endpoint::Similarity,
                    round: req.meta.round,
                    role: req.meta.role,
                    target: None,
                    tag: None,
                    fingerprint: fp,
                    retries,
                    ok: false,
                    user_text: None,
                    raw_reply: None,
                    error: Some(e.to_string()),
                });
                Err(e)
            }
        }
    }

    /// Box-prompted propagation. Returns one masklet per box, in box order,
    /// with `target_ids[i]` assigned to the masklet of box `i`. Zero boxes
    /// short-circuit without contacting the backend.
    pub fn segment(&self, req: &SegmentRequest, target_ids: &[usize], width: u32, height: u32) -> Result<Vec<Masklet>> {
        if req.boxes.is_empty() {
            return Ok(Vec::new());
        }
        req.validate()?;
        if target_ids.len() != req.boxes.len() {
            return Err(Error::InvalidInput("one target id per box required".into()));
        }
        let fp = fingerprint(req);
        let (resp, retries) =
            self.with_transport_retry(Endpoint::Segment, &req.meta, &fp, || self.backend.segment(req))?;
        let convert = || -> Result<Vec<Masklet>> {
            if resp.masklets.len() != req.boxes.len() {
                return Err(Error::Arity {
                    expected: req.boxes.len(),
                    got: resp.masklets.len(),
                });
            }
            let mut wire = resp.masklets.clone();
            wire.sort_by_key(|m| m.box_index);
            wire.iter()
                .enumerate()
                .map(|(i, w)| {
                    if w.box_index != i {
                        return Err(Error::Protocol(format!("masklet box_index {} out of order", w.box_index)));
                    }
                    let m = w.to_masklet(target_ids[i])?;
                    m.check_shape(req.frames.len(), width, height)?;
                    Ok(m)
                })
                .collect()
        };
        match convert() {
            Ok(m) => {
                self.record_ok(Endpoint::Segment, &req.meta, fp, retries);
                Ok(m)
            }
            Err(e) => {
                self.record(Exchange {
                    endpoint: Endpoint::Segment,
                    round: req.meta.round,
                    role: req.meta.role,
                    target: None,
                    tag: None,
                    fingerprint: fp,
                    retries,
                    ok: false,
                    user_text: None,
                    raw_reply: None,
                    error: Some(e.to_string()),
                });
                Err(e)
            }
        }
    }
}
