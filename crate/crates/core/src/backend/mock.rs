//! Deterministic scripted backend loaded from a `mock-scenario/1` document.
//!
//! Entries are matched on `(tag, round?, role?, target?, fingerprint?)`.
//! Unset fields are wildcards; among matching entries the one with the most
//! fields set wins, ties going to the earlier entry. Requests with no match
//! fail with a scripted-gap fault naming the request fingerprint.
//!
//! Segmentation is answered by a ground-truth oracle: for each prompt box the
//! stored GT masklet whose box on the prompt frame has the highest IoU with
//! it is returned (IoU at least `gt_match_iou`), otherwise an empty masklet.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::protocol::{
    fingerprint, AgentRole, ChatRequest, ChatResponse, RequestMeta, ResponseTag, SegmentRequest, SegmentResponse,
    SimilarityRequest, SimilarityResponse, WireImage, WireMasklet,
};
use super::{BackendFault, FaultResult, ModelBackend};
use crate::error::{Error, Result};
use crate::video_io::{Mask, MaskletDocument, Masklet};

pub const MOCK_SCENARIO_SCHEMA: &str = "mock-scenario/1";
pub const SIMILARITY_TAG: &str = "similarity";

fn default_gt_iou() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchKey {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<AgentRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

impl MatchKey {
    pub fn chat(tag: ResponseTag) -> Self {
        Self::raw(tag.as_str())
    }

    pub fn similarity() -> Self {
        Self::raw(SIMILARITY_TAG)
    }

    fn raw(tag: &str) -> Self {
        Self {
            tag: tag.to_string(),
            round: None,
            role: None,
            target: None,
            fingerprint: None,
        }
    }

    pub fn round(mut self, round: u32) -> Self {
        self.round = Some(round);
        self
    }

    pub fn role(mut self, role: AgentRole) -> Self {
        self.role = Some(role);
        self
    }

    pub fn target(mut self, target: usize) -> Self {
        self.target = Some(target);
        self
    }

    pub fn fingerprint(mut self, fp: impl Into<String>) -> Self {
        self.fingerprint = Some(fp.into());
        self
    }

    fn specificity(&self) -> usize {
        self.round.is_some() as usize
            + self.role.is_some() as usize
            + self.target.is_some() as usize
            + self.fingerprint.is_some() as usize * 4
    }

    fn matches(&self, tag: &str, meta: &RequestMeta, fp: &str) -> bool {
        self.tag == tag
            && self.round.is_none_or(|r| r == meta.round)
            && self.role.is_none_or(|r| r == meta.role)
            && self.target.is_none_or(|t| Some(t) == meta.target)
            && self.fingerprint.as_deref().is_none_or(|f| f == fp)
    }
}

/// One scripted answer. Exactly one of `reply`, `replies`, `per_image` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(rename = "match")]
    pub key: MatchKey,
    /// Fixed reply. Strings are sent verbatim as model text; other JSON is
    /// serialized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<Value>,
    /// Successive replies for successive matches; the last one repeats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replies: Option<Vec<Value>>,
    /// Value per request image, keyed by image hash; the reply is the JSON
    /// array of values in request image order (a single image yields the
    /// bare value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_image: Option<BTreeMap<String, Value>>,
    /// Fallback for images missing from `per_image`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    /// The first `n` matches fail with a transport fault.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub transport_failures: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl MockEntry {
    pub fn reply(key: MatchKey, reply: impl Into<Value>) -> Self {
        Self {
            key,
            reply: Some(reply.into()),
            replies: None,
            per_image: None,
            default: None,
            transport_failures: 0,
        }
    }

    pub fn replies(key: MatchKey, replies: Vec<Value>) -> Self {
        Self {
            replies: Some(replies),
            reply: None,
            ..Self::reply(key, Value::Null)
        }
    }

    pub fn per_image(key: MatchKey, values: BTreeMap<String, Value>, default: Option<Value>) -> Self {
        Self {
            per_image: Some(values),
            default,
            reply: None,
            ..Self::reply(key, Value::Null)
        }
    }

    pub fn with_transport_failures(mut self, n: u32) -> Self {
        self.transport_failures = n;
        self
    }
}

/// `mock-scenario/1` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScenario {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default)]
    pub entries: Vec<MockEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<MaskletDocument>,
    #[serde(default = "default_gt_iou")]
    pub gt_match_iou: f64,
}

impl Default for MockScenario {
    fn default() -> Self {
        Self {
            schema: MOCK_SCENARIO_SCHEMA.to_string(),
            template: None,
            seed: None,
            query: None,
            entries: Vec::new(),
            gt: None,
            gt_match_iou: default_gt_iou(),
        }
    }
}

impl MockScenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entry(mut self, entry: MockEntry) -> Self {
        self.entries.push(entry);
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let s: Self = serde_json::from_slice(&bytes).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != MOCK_SCENARIO_SCHEMA {
            return Err(Error::Scenario(format!("unsupported schema `{}`", self.schema)));
        }
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let known_tag = e.key.tag == SIMILARITY_TAG
                || serde_json::from_value::<ResponseTag>(Value::String(e.key.tag.clone())).is_ok();
            if !known_tag {
                return Err(Error::Scenario(format!("entry {i}: unknown tag `{}`", e.key.tag)));
            }
            let forms = e.reply.is_some() as u8 + e.replies.is_some() as u8 + e.per_image.is_some() as u8;
            if forms != 1 {
                return Err(Error::Scenario(format!(
                    "entry {i}: exactly one of reply/replies/per_image required"
                )));
            }
            if e.replies.as_ref().is_some_and(|r| r.is_empty()) {
                return Err(Error::Scenario(format!("entry {i}: empty replies")));
            }
            if !seen.insert(e.key.clone()) {
                return Err(Error::Scenario(format!("entry {i}: duplicate key {:?}", e.key)));
            }
        }
        if let Some(gt) = &self.gt {
            gt.to_masklets().map_err(|e| Error::Scenario(format!("gt: {e}")))?;
        }
        if !(0.0..=1.0).contains(&self.gt_match_iou) {
            return Err(Error::Scenario("gt_match_iou must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Request as observed by the mock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockCall {
    pub tag: String,
    pub round: u32,
    pub role: AgentRole,
    pub target: Option<usize>,
    pub fingerprint: String,
    pub system_prompt: String,
    pub user_text: String,
    pub image_count: usize,
    /// Index of the matched entry, if any.
    pub entry: Option<usize>,
}

#[derive(Default)]
struct MockState {
    uses: Vec<u32>,
    calls: Vec<MockCall>,
}

pub struct MockBackend {
    scenario: MockScenario,
    gt: Vec<Masklet>,
    state: Mutex<MockState>,
}

impl MockBackend {
    pub fn new(scenario: MockScenario) -> Result<Self> {
        scenario.validate()?;
        let gt = match &scenario.gt {
            Some(doc) => doc.to_masklets()?,
            None => Vec::new(),
        };
        let state = MockState {
            uses: vec![0; scenario.entries.len()],
            calls: Vec::new(),
        };
        Ok(Self {
            scenario,
            gt,
            state: Mutex::new(state),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(MockScenario::load(path)?)
    }

    pub fn scenario(&self) -> &MockScenario {
        &self.scenario
    }

    /// Every request received so far, in arrival order (retries included).
    pub fn calls(&self) -> Vec<MockCall> {
        self.state.lock().expect("mock state poisoned").calls.clone()
    }

    pub fn clear_calls(&self) {
        self.state.lock().expect("mock state poisoned").calls.clear();
    }

    fn lookup(&self, tag: &str, meta: &RequestMeta, fp: &str) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (i, e) in self.scenario.entries.iter().enumerate() {
            if e.key.matches(tag, meta, fp) {
                let s = e.key.specificity();
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((i, s));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Logs the call, resolves the entry and applies fault injection.
    #[allow(clippy::too_many_arguments)]
    fn begin(
        &self,
        tag: &str,
        meta: &RequestMeta,
        fp: &str,
        system_prompt: &str,
        user_text: &str,
        image_count: usize,
    ) -> FaultResult<(usize, u32)> {
        let entry = self.lookup(tag, meta, fp);
        let mut st = self.state.lock().expect("mock state poisoned");
        st.calls.push(MockCall {
            tag: tag.to_string(),
            round: meta.round,
            role: meta.role,
            target: meta.target,
            fingerprint: fp.to_string(),
            system_prompt: system_prompt.to_string(),
            user_text: user_text.to_string(),
            image_count,
            entry,
        });
        let Some(i) = entry else {
            return Err(BackendFault::ScriptedGap {
                tag: tag.to_string(),
                role: meta.role.to_string(),
                round: meta.round,
                fingerprint: fp.to_string(),
            });
        };
        let use_index = st.uses[i];
        st.uses[i] += 1;
        let failures = self.scenario.entries[i].transport_failures;
        if use_index < failures {
            return Err(BackendFault::Transport(format!(
                "injected transport failure {} of {failures}",
                use_index + 1
            )));
        }
        Ok((i, use_index - failures))
    }

    fn resolve(&self, entry: usize, use_index: u32, images: &[WireImage], meta: &RequestMeta) -> FaultResult<Value> {
        let e = &self.scenario.entries[entry];
        if let Some(v) = &e.reply {
            return Ok(v.clone());
        }
        if let Some(seq) = &e.replies {
            let i = (use_index as usize).min(seq.len() - 1);
            return Ok(seq[i].clone());
        }
        let map = e.per_image.as_ref().expect("validated entry form");
        let mut values = Vec::with_capacity(images.len());
        for img in images {
            let h = img.hash().map_err(|err| BackendFault::Rejected {
                code: "bad_image".into(),
                message: err.to_string(),
            })?;
            match map.get(&h).or(e.default.as_ref()) {
                Some(v) => values.push(v.clone()),
                None => {
                    return Err(BackendFault::ScriptedGap {
                        tag: e.key.tag.clone(),
                        role: meta.role.to_string(),
                        round: meta.round,
                        fingerprint: format!("image:{h}"),
                    })
                }
            }
        }
        Ok(if values.len() == 1 {
            values.pop().expect("one value")
        } else {
            Value::Array(values)
        })
    }

    fn gt_oracle(&self, req: &SegmentRequest) -> FaultResult<SegmentResponse> {
        let t = req.frames.len();
        let (w, h) = match self.gt.first().and_then(|m| m.masks.first()) {
            Some(m) => m.dims(),
            None => req
                .frames
                .first()
                .ok_or_else(|| BackendFault::Rejected {
                    code: "bad_request".into(),
                    message: "no frames".into(),
                })?
                .dimensions()
                .map_err(|e| BackendFault::Rejected {
                    code: "bad_image".into(),
                    message: e.to_string(),
                })?,
        };
        if let Some(m) = self.gt.iter().find(|m| m.masks.len() != t) {
            return Err(BackendFault::Rejected {
                code: "dimension_mismatch".into(),
                message: format!("scenario GT target {} has {} frames, request has {t}", m.target_id, m.masks.len()),
            });
        }
        let gt_boxes: Vec<_> = self
            .gt
            .iter()
            .map(|m| m.masks.get(req.prompt_frame_index).and_then(Mask::bounding_box))
            .collect();
        let masklets = req
            .boxes
            .iter()
            .enumerate()
            .map(|(bi, b)| {
                let mut best: Option<(usize, f64)> = None;
                for (gi, gb) in gt_boxes.iter().enumerate() {
                    if let Some(gb) = gb {
                        let iou = b.iou(gb);
                        if best.is_none_or(|(_, bv)| iou > bv) {
                            best = Some((gi, iou));
                        }
                    }
                }
                match best {
                    Some((gi, iou)) if iou >= self.scenario.gt_match_iou && iou > 0.0 => {
                        WireMasklet::from_masks(bi, &self.gt[gi].masks, w, h)
                    }
                    _ => WireMasklet::from_masks(bi, &vec![Mask::empty(w, h); t], w, h),
                }
            })
            .collect();
        Ok(SegmentResponse::new(masklets))
    }
}

fn reply_text(v: Value) -> String {
    match v {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn scores_from(v: Value, n: usize) -> FaultResult<Vec<f64>> {
    let bad = |msg: String| BackendFault::Rejected {
        code: "bad_script".into(),
        message: msg,
    };
    match v {
        Value::Array(items) => items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad(format!("non-numeric similarity {x}"))))
            .collect(),
        Value::Number(x) => Ok(vec![x.as_f64().expect("json number"); n]),
        other => Err(bad(format!("similarity reply must be number(s), got {other}"))),
    }
}

impl ModelBackend for MockBackend {
    fn chat(&self, req: &ChatRequest) -> FaultResult<ChatResponse> {
        let fp = fingerprint(req);
        let tag = req.response_schema_tag.as_str();
        let (entry, use_index) =
            self.begin(tag, &req.meta, &fp, &req.system_prompt, &req.user_text, req.images.len())?;
        let v = self.resolve(entry, use_index, &req.images, &req.meta)?;
        Ok(ChatResponse::new(reply_text(v)))
    }

    fn similarity(&self, req: &SimilarityRequest) -> FaultResult<SimilarityResponse> {
        let fp = fingerprint(req);
        let (entry, use_index) = self.begin(SIMILARITY_TAG, &req.meta, &fp, "", &req.query_text, req.images.len())?;
        let v = self.resolve(entry, use_index, &req.images, &req.meta)?;
        let v = match (v, req.images.len()) {
            (Value::Number(n), 1) if self.scenario.entries[entry].per_image.is_some() => Value::Array(vec![Value::Number(n)]),
            (v, _) => v,
        };
        Ok(SimilarityResponse::new(scores_from(v, req.images.len())?))
    }

    fn segment(&self, req: &SegmentRequest) -> FaultResult<SegmentResponse> {
        let fp = fingerprint(req);
        {
            let mut st = self.state.lock().expect("mock state poisoned");
            st.calls.push(MockCall {
                tag: "segment".into(),
                round: req.meta.round,
                role: req.meta.role,
                target: req.meta.target,
                fingerprint: fp,
                system_prompt: String::new(),
                user_text: String::new(),
                image_count: req.frames.len(),
                entry: None,
            });
        }
        self.gt_oracle(req)
    }
}
