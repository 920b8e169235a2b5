//! Serves any [`ModelBackend`] over the HTTP wire protocol.
//!
//! Used to put scripted mocks behind a real socket so the HTTP client and
//! the in-process path can be checked by the same conformance suite.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tiny_http::{Header, Method, Response, Server};

use super::protocol::ErrorResponse;
use super::{BackendFault, FaultResult, ModelBackend};
use crate::error::{Error, Result};

pub struct BackendServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl BackendServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn start(backend: Arc<dyn ModelBackend>, addr: &str) -> Result<Self> {
        let server = Server::http(addr).map_err(|e| Error::Protocol(format!("bind {addr}: {e}")))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::Protocol("server is not bound to an IP socket".into()))?;
        let server = Arc::new(server);
        let srv = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for request in srv.incoming_requests() {
                handle(&*backend, request);
            }
        });
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn local(backend: Arc<dyn ModelBackend>) -> Result<Self> {
        Self::start(backend, "127.0.0.1:0")
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackendServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_response(status: u16, body: Vec<u8>) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes(&b"content-type"[..], &b"application/json"[..]).expect("static header");
    Response::from_data(body).with_status_code(status).with_header(header)
}

fn error_response(status: u16, code: &str, message: &str, retryable: bool) -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_vec(&ErrorResponse::new(code, message, retryable)).expect("error body serializes");
    json_response(status, body)
}

fn dispatch<Req: DeserializeOwned, Resp: Serialize>(
    body: &str,
    call: impl FnOnce(&Req) -> FaultResult<Resp>,
) -> Response<std::io::Cursor<Vec<u8>>> {
    let req: Req = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return error_response(400, "bad_request", &e.to_string(), false),
    };
    match call(&req) {
        Ok(resp) => json_response(200, serde_json::to_vec(&resp).expect("response serializes")),
        Err(BackendFault::Transport(msg)) => error_response(503, "unavailable", &msg, true),
        Err(BackendFault::Rejected { code, message }) => error_response(400, &code, &message, false),
        Err(BackendFault::ScriptedGap {
            tag,
            role,
            round,
            fingerprint,
        }) => error_response(
            422,
            "scripted_gap",
            &format!("tag={tag} role={role} round={round} fingerprint={fingerprint}"),
            false,
        ),
    }
}

fn handle(backend: &dyn ModelBackend, mut request: tiny_http::Request) {
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        let _ = request.respond(error_response(400, "bad_request", "unreadable body", false));
        return;
    }
    let response = match (request.method(), request.url()) {
        (Method::Get, "/v1/health") => json_response(200, br#"{"status":"ok"}"#.to_vec()),
        (Method::Post, "/v1/chat") => dispatch(&body, |r| backend.chat(r)),
        (Method::Post, "/v1/similarity") => dispatch(&body, |r| backend.similarity(r)),
        (Method::Post, "/v1/segment") => dispatch(&body, |r| backend.segment(r)),
        _ => error_response(404, "not_found", request.url(), false),
    };
    let _ = request.respond(response);
}
