//! Structural checks any [`ModelBackend`] must pass.
//!
//! The checks only look at reply shape (schemas, arity, dimensions, RLE
//! consistency), never at content, so the same suite runs against the mock
//! in-process, the mock behind HTTP, or a real model server.

use image::{Rgb, RgbImage};
use serde_json::json;

use super::mock::{MatchKey, MockEntry, MockScenario};
use super::protocol::{
    AgentRole, ChatRequest, RequestMeta, ResponseTag, SegmentRequest, SimilarityRequest, WireImage,
    CHAT_RESPONSE_SCHEMA, SEGMENT_RESPONSE_SCHEMA, SIMILARITY_RESPONSE_SCHEMA,
};
use super::ModelBackend;
use crate::geometry::NormBox;

pub const PROBE_WIDTH: u32 = 24;
pub const PROBE_HEIGHT: u32 = 16;
pub const PROBE_FRAMES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, result: Result<(), String>) -> Self {
        match result {
            Ok(()) => Self {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Self {
                name,
                passed: false,
                detail,
            },
        }
    }
}

fn probe_frames() -> Vec<WireImage> {
    (0..PROBE_FRAMES)
        .map(|i| {
            let v = 40 + 60 * i as u8;
            let img = RgbImage::from_pixel(PROBE_WIDTH, PROBE_HEIGHT, Rgb([v, 255 - v, 128]));
            WireImage::encode(&img).expect("probe frame encodes")
        })
        .collect()
}

/// Scenario that lets [`crate::backend::MockBackend`] answer every probe.
pub fn conformance_scenario() -> MockScenario {
    MockScenario::new()
        .with_entry(MockEntry::reply(
            MatchKey::chat(ResponseTag::FreeText),
            "a short description",
        ))
        .with_entry(MockEntry::reply(MatchKey::similarity(), json!([0.1, 0.5, 0.3])))
}

fn check_chat(backend: &dyn ModelBackend) -> Result<(), String> {
    let req = ChatRequest::new(
        RequestMeta::new(1, AgentRole::IntentAnalyst),
        ResponseTag::FreeText,
        "Describe the image.",
        "What is shown?",
        probe_frames()[..1].to_vec(),
    );
    let resp = backend.chat(&req).map_err(|f| format!("{f:?}"))?;
    if resp.schema != CHAT_RESPONSE_SCHEMA {
        return Err(format!("schema {}", resp.schema));
    }
    Ok(())
}

fn check_similarity(backend: &dyn ModelBackend) -> Result<(), String> {
    let req = SimilarityRequest::new(RequestMeta::new(1, AgentRole::FrameSimilarity), "a frame", probe_frames());
    let resp = backend.similarity(&req).map_err(|f| format!("{f:?}"))?;
    if resp.schema != SIMILARITY_RESPONSE_SCHEMA {
        return Err(format!("schema {}", resp.schema));
    }
    if resp.scores.len() != PROBE_FRAMES {
        return Err(format!("{} scores for {PROBE_FRAMES} images", resp.scores.len()));
    }
    if resp.scores.iter().any(|s| !s.is_finite()) {
        return Err("non-finite score".into());
    }
    Ok(())
}

fn check_segment(backend: &dyn ModelBackend) -> Result<(), String> {
    let boxes = vec![NormBox::new(0.1, 0.1, 0.5, 0.6), NormBox::new(0.4, 0.2, 0.9, 0.9)];
    let req = SegmentRequest::new(RequestMeta::new(1, AgentRole::Segmenter), probe_frames(), 1, boxes);
    let resp = backend.segment(&req).map_err(|f| format!("{f:?}"))?;
    if resp.schema != SEGMENT_RESPONSE_SCHEMA {
        return Err(format!("schema {}", resp.schema));
    }
    if resp.masklets.len() != req.boxes.len() {
        return Err(format!("{} masklets for {} boxes", resp.masklets.len(), req.boxes.len()));
    }
    let mut indices: Vec<usize> = resp.masklets.iter().map(|m| m.box_index).collect();
    indices.sort_unstable();
    if indices != (0..req.boxes.len()).collect::<Vec<_>>() {
        return Err(format!("box indices {indices:?}"));
    }
    for m in &resp.masklets {
        if (m.width, m.height) != (PROBE_WIDTH, PROBE_HEIGHT) {
            return Err(format!("masklet {}: {}x{}", m.box_index, m.width, m.height));
        }
        m.to_masklet(m.box_index)
            .and_then(|ml| ml.check_shape(PROBE_FRAMES, PROBE_WIDTH, PROBE_HEIGHT))
            .map_err(|e| format!("masklet {}: {e}", m.box_index))?;
    }
    Ok(())
}

/// Runs every structural check against `backend`.
pub fn run_conformance(backend: &dyn ModelBackend) -> Vec<Check> {
    vec![
        Check::new("chat_response_schema", check_chat(backend)),
        Check::new("similarity_arity", check_similarity(backend)),
        Check::new("segment_shape", check_segment(backend)),
    ]
}
