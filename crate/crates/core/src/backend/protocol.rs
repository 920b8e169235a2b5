//! Versioned wire types for `/v1/chat`, `/v1/similarity` and `/v1/segment`.

use std::fmt;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::NormBox;
use crate::video_io::{self, Mask, Masklet};

pub const CHAT_REQUEST_SCHEMA: &str = "chat-request/1";
pub const CHAT_RESPONSE_SCHEMA: &str = "chat-response/1";
pub const SIMILARITY_REQUEST_SCHEMA: &str = "similarity-request/1";
pub const SIMILARITY_RESPONSE_SCHEMA: &str = "similarity-response/1";
pub const SEGMENT_REQUEST_SCHEMA: &str = "segment-request/1";
pub const SEGMENT_RESPONSE_SCHEMA: &str = "segment-response/1";
pub const ERROR_SCHEMA: &str = "error/1";

/// Expected reply shape of a chat call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseTag {
    FreeText,
    FrameScores,
    Expressions,
    Box,
    QaAnswers,
    Questions,
    Attributes,
    /// Merged frame scoring + intent analysis.
    ScoresAndExpressions,
    /// Merged intent analysis + grounding.
    ExpressionsAndBoxes,
    /// Frame scoring, intent analysis and grounding in one call.
    ScoresAndTargets,
}

impl ResponseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResponseTag::FreeText => "free_text",
            ResponseTag::FrameScores => "frame_scores",
            ResponseTag::Expressions => "expressions",
            ResponseTag::Box => "box",
            ResponseTag::QaAnswers => "qa_answers",
            ResponseTag::Questions => "questions",
            ResponseTag::Attributes => "attributes",
            ResponseTag::ScoresAndExpressions => "scores_and_expressions",
            ResponseTag::ExpressionsAndBoxes => "expressions_and_boxes",
            ResponseTag::ScoresAndTargets => "scores_and_targets",
        }
    }
}

impl fmt::Display for ResponseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which pipeline role issued a request. Carried in request metadata so
/// scripted backends can key on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    FrameSimilarity,
    FrameScorer,
    IntentAnalyst,
    Grounder,
    ExistenceQuestioner,
    ExistenceResponder,
    AttributeDecomposer,
    ConsistencyQuestioner,
    ConsistencyResponder,
    MergedSelectIntent,
    MergedIntentGround,
    MergedAll,
    Segmenter,
}

impl AgentRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentRole::FrameSimilarity => "frame_similarity",
            AgentRole::FrameScorer => "frame_scorer",
            AgentRole::IntentAnalyst => "intent_analyst",
            AgentRole::Grounder => "grounder",
            AgentRole::ExistenceQuestioner => "existence_questioner",
            AgentRole::ExistenceResponder => "existence_responder",
            AgentRole::AttributeDecomposer => "attribute_decomposer",
            AgentRole::ConsistencyQuestioner => "consistency_questioner",
            AgentRole::ConsistencyResponder => "consistency_responder",
            AgentRole::MergedSelectIntent => "merged_select_intent",
            AgentRole::MergedIntentGround => "merged_intent_ground",
            AgentRole::MergedAll => "merged_all",
            AgentRole::Segmenter => "segmenter",
        }
    }

    pub fn is_reflection(&self) -> bool {
        matches!(
            self,
            AgentRole::ExistenceQuestioner
                | AgentRole::ExistenceResponder
                | AgentRole::AttributeDecomposer
                | AgentRole::ConsistencyQuestioner
                | AgentRole::ConsistencyResponder
        )
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestMeta {
    pub round: u32,
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl RequestMeta {
    pub fn new(round: u32, role: AgentRole) -> Self {
        Self {
            round,
            role,
            target: None,
        }
    }

    pub fn with_target(mut self, target: usize) -> Self {
        self.target = Some(target);
        self
    }
}

/// Base64 PNG image as carried on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WireImage(pub String);

impl WireImage {
    pub fn encode(img: &RgbImage) -> Result<Self> {
        Ok(Self(B64.encode(video_io::encode_png(img)?)))
    }

    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        B64.decode(&self.0)
            .map_err(|e| Error::Protocol(format!("invalid base64 image: {e}")))
    }

    /// Hash of the decoded PNG bytes (see [`video_io::image_hash`]).
    pub fn hash(&self) -> Result<String> {
        Ok(video_io::image_hash(&self.png_bytes()?))
    }

    pub fn decode(&self) -> Result<RgbImage> {
        Ok(image::load_from_memory(&self.png_bytes()?)?.to_rgb8())
    }

    pub fn dimensions(&self) -> Result<(u32, u32)> {
        let bytes = self.png_bytes()?;
        let reader = image::ImageReader::with_format(std::io::Cursor::new(bytes), image::ImageFormat::Png);
        Ok(reader.into_dimensions()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub schema: String,
    pub system_prompt: String,
    pub user_text: String,
    pub images: Vec<WireImage>,
    pub response_schema_tag: ResponseTag,
    pub meta: RequestMeta,
}

impl ChatRequest {
    pub fn new(
        meta: RequestMeta,
        tag: ResponseTag,
        system_prompt: impl Into<String>,
        user_text: impl Into<String>,
        images: Vec<WireImage>,
    ) -> Self {
        Self {
            schema: CHAT_REQUEST_SCHEMA.to_string(),
            system_prompt: system_prompt.into(),
            user_text: user_text.into(),
            images,
            response_schema_tag: tag,
            meta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub schema: String,
    pub text: String,
}

impl ChatResponse {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            schema: CHAT_RESPONSE_SCHEMA.to_string(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRequest {
    pub schema: String,
    pub query_text: String,
    pub images: Vec<WireImage>,
    pub meta: RequestMeta,
}

impl SimilarityRequest {
    pub fn new(meta: RequestMeta, query_text: impl Into<String>, images: Vec<WireImage>) -> Self {
        Self {
            schema: SIMILARITY_REQUEST_SCHEMA.to_string(),
            query_text: query_text.into(),
            images,
            meta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub schema: String,
    pub scores: Vec<f64>,
}

impl SimilarityResponse {
    pub fn new(scores: Vec<f64>) -> Self {
        Self {
            schema: SIMILARITY_RESPONSE_SCHEMA.to_string(),
            scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub schema: String,
    pub frames: Vec<WireImage>,
    pub prompt_frame_index: usize,
    pub boxes: Vec<NormBox>,
    pub meta: RequestMeta,
}

impl SegmentRequest {
    pub fn new(meta: RequestMeta, frames: Vec<WireImage>, prompt_frame_index: usize, boxes: Vec<NormBox>) -> Self {
        Self {
            schema: SEGMENT_REQUEST_SCHEMA.to_string(),
            frames,
            prompt_frame_index,
            boxes,
            meta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt_frame_index >= self.frames.len() {
            return Err(Error::InvalidInput(format!(
                "prompt frame {} out of range for {} frames",
                self.prompt_frame_index,
                self.frames.len()
            )));
        }
        if let Some(b) = self.boxes.iter().find(|b| !b.is_valid()) {
            return Err(Error::InvalidInput(format!("invalid box {b:?}")));
        }
        Ok(())
    }
}

/// One masklet on the wire, run-length encoded per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMasklet {
    pub box_index: usize,
    pub width: u32,
    pub height: u32,
    pub frames: Vec<Vec<Vec<u32>>>,
}

impl WireMasklet {
    pub fn from_masks(box_index: usize, masks: &[Mask], width: u32, height: u32) -> Self {
        Self {
            box_index,
            width,
            height,
            frames: masks.iter().map(Mask::to_rle).collect(),
        }
    }

    pub fn to_masklet(&self, target_id: usize) -> Result<Masklet> {
        let masks = self
            .frames
            .iter()
            .map(|rows| Mask::from_rle(self.width, self.height, rows))
            .collect::<Result<Vec<_>>>()?;
        Ok(Masklet { target_id, masks })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub schema: String,
    pub masklets: Vec<WireMasklet>,
}

impl SegmentResponse {
    pub fn new(masklets: Vec<WireMasklet>) -> Self {
        Self {
            schema: SEGMENT_RESPONSE_SCHEMA.to_string(),
            masklets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub retryable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub schema: String,
    pub error: ErrorBody,
}

impl ErrorResponse {
    pub fn new(code: impl Into<String>, message: impl Into<String>, retryable: bool) -> Self {
        Self {
            schema: ERROR_SCHEMA.to_string(),
            error: ErrorBody {
                code: code.into(),
                message: message.into(),
                retryable,
            },
        }
    }
}

/// Stable fingerprint of a request body: SHA-256 over its canonical JSON
/// (object keys sorted, no insignificant whitespace).
pub fn fingerprint<T: Serialize>(req: &T) -> String {
    let value = serde_json::to_value(req).expect("wire types serialize");
    let mut buf = Vec::new();
    write_canonical(&value, &mut buf);
    hex::encode(Sha256::digest(&buf))
}

fn write_canonical(v: &serde_json::Value, out: &mut Vec<u8>) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push(b'{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                out.extend(serde_json::to_vec(k).expect("string serializes"));
                out.push(b':');
                write_canonical(&map[k], out);
            }
            out.push(b'}');
        }
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_canonical(item, out);
            }
            out.push(b']');
        }
        other => out.extend(serde_json::to_vec(other).expect("scalar serializes")),
    }
}
