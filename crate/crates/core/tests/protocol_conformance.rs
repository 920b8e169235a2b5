mod common;

use std::sync::Arc;
use std::time::Duration;

use image::{Rgb, RgbImage};

use refer_engine::backend::conformance::{conformance_scenario, run_conformance};
use refer_engine::backend::mock::{MockBackend, MockScenario};
use refer_engine::backend::protocol::{
    AgentRole, ChatRequest, ErrorResponse, RequestMeta, ResponseTag, SegmentRequest, WireImage,
};
use refer_engine::backend::{BackendClient, BackendServer, HttpBackend, ModelBackend, RetryPolicy};
use refer_engine::geometry::NormBox;
use refer_engine::mock_fixtures::FixtureTemplate;
use refer_engine::orchestrator;
use refer_engine::video_io::{Mask, MaskletDocument, Masklet};
use refer_engine::Error;

use common::*;

fn assert_all_pass(backend: &dyn ModelBackend) {
    let checks = run_conformance(backend);
    assert!(!checks.is_empty());
    for c in checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}

fn serve(scenario: MockScenario) -> (Arc<MockBackend>, BackendServer, HttpBackend) {
    let mock = Arc::new(MockBackend::new(scenario).unwrap());
    let server = BackendServer::local(mock.clone()).unwrap();
    let http = HttpBackend::with_base_url(&server.base_url(), Duration::from_secs(10));
    (mock, server, http)
}

#[test]
fn mock_conforms_in_process() {
    assert_all_pass(&MockBackend::new(conformance_scenario()).unwrap());
}

#[test]
fn mock_conforms_over_http() {
    let (_mock, _server, http) = serve(conformance_scenario());
    assert_all_pass(&http);
}

#[test]
fn health_and_error_shapes() {
    let (_mock, server, _http) = serve(MockScenario::new());
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut health = agent.get(format!("{}/v1/health", server.base_url())).call().unwrap();
    assert_eq!(health.status(), 200);
    assert!(health.body_mut().read_to_string().unwrap().contains("ok"));

    let mut bad = agent
        .post(format!("{}/v1/chat", server.base_url()))
        .header("content-type", "application/json")
        .send("{not json")
        .unwrap();
    assert_eq!(bad.status().as_u16() / 100, 4);
    let body: ErrorResponse = serde_json::from_str(&bad.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(body.schema, "error/1");
    assert!(!body.error.retryable);
}

#[test]
fn unscripted_request_fails_without_retry_over_http() {
    let (mock, _server, http) = serve(MockScenario::new());
    let client = BackendClient::new(Arc::new(http), RetryPolicy::no_backoff());
    let req = ChatRequest::new(
        RequestMeta::new(1, AgentRole::IntentAnalyst),
        ResponseTag::Expressions,
        "s",
        "u",
        vec![],
    );
    let err = client.chat(&req).unwrap_err();
    assert!(!matches!(err, Error::Transport { .. }), "{err}");
    assert_eq!(mock.calls().len(), 1);
}

#[test]
fn segment_shape_contract_over_http() {
    for t in [1usize, 8] {
        let (w, h) = (20u32, 12u32);
        let gt = Masklet {
            target_id: 0,
            masks: (0..t).map(|_| Mask::from_fn(w, h, |x, y| (4..12).contains(&x) && (2..8).contains(&y))).collect(),
        };
        let mut s = MockScenario::new();
        s.gt = Some(MaskletDocument::from_masklets(w, h, t, std::slice::from_ref(&gt)));
        let (_mock, _server, http) = serve(s);
        let client = BackendClient::new(Arc::new(http), RetryPolicy::no_backoff());
        let frames: Vec<WireImage> =
            (0..t).map(|i| WireImage::encode(&RgbImage::from_pixel(w, h, Rgb([i as u8, 0, 0]))).unwrap()).collect();
        let boxes = vec![gt.masks[0].bounding_box().unwrap(), NormBox::new(0.9, 0.9, 1.0, 1.0)];
        let req = SegmentRequest::new(RequestMeta::new(1, AgentRole::Segmenter), frames, 0, boxes);
        let out = client.segment(&req, &[3, 4], w, h).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].target_id, 3);
        assert_eq!(out[0].masks, gt.masks);
        for m in &out {
            assert_eq!(m.masks.len(), t);
            assert!(m.masks.iter().all(|k| k.dims() == (w, h)));
        }
        assert!(out[1].masks.iter().all(|k| k.is_empty()));
    }
}

#[test]
fn full_session_over_http_matches_in_process() {
    let f = fixture(FixtureTemplate::KeyframeCorrection, 2);
    let (local, _) = run(&f, &test_config());
    let (_mock, server, _http) = serve(f.scenario.clone());
    let mut cfg = test_config();
    cfg.backends.chat_url = Some(format!("{}/v1/chat", server.base_url()));
    cfg.backends.similarity_url = Some(format!("{}/v1/similarity", server.base_url()));
    cfg.backends.segment_url = Some(format!("{}/v1/segment", server.base_url()));
    let backend = cfg.backends.connect().unwrap();
    let remote = orchestrator::run_session(&f.clip, &f.query, &cfg, backend).unwrap();
    assert_eq!(remote.rounds_used, local.rounds_used);
    assert_eq!(remote.masklets, local.masklets);
    assert!(score(&f, &remote).jf >= 0.99);
}
