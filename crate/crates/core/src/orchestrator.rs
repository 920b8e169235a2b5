//! The alternating reasoning/reflection loop for one video and query.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::agents::{self, Grounding, TargetExpression};
use crate::backend::protocol::{AgentRole, RequestMeta, SegmentRequest, WireImage};
use crate::backend::{AttributeSpec, BackendClient, Exchange, ModelBackend};
use crate::config::{Config, MergeMode};
use crate::context::StageContext;
use crate::error::{Error, Result};
use crate::focus_layout::{self, FocusCanvas};
use crate::frame_selection::{self, CandidatePool, FrameSelection};
use crate::geometry::NormBox;
use crate::prompts::PromptSet;
use crate::reflection::{self, ReflectionChain, ReflectionLog};
use crate::video_io::{self, MaskFormat, Masklet, VideoClip};

pub const SESSION_LOG_SCHEMA: &str = "session-log/1";
pub const SESSION_LOG_FILE: &str = "session_log.json";
pub const REFLECTION_LOG_FILE: &str = "reflection_log.json";
pub const RESULT_FILE: &str = "result.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    Accepted,
    Exhausted,
}

/// Everything one round produced, in stage order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub existence_feedback_in: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency_feedback_in: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<FrameSelection>,
    /// The selection was carried over from the previous round.
    pub selection_reused: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canvas: Option<FocusCanvas>,
    pub expressions: Vec<TargetExpression>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grounding: Option<Grounding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub existence: Option<ReflectionChain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ReflectionChain>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RoundRecord {
    fn new(round: u32) -> Self {
        Self {
            round,
            existence_feedback_in: None,
            consistency_feedback_in: None,
            selection: None,
            selection_reused: false,
            canvas: None,
            expressions: Vec::new(),
            grounding: None,
            existence: None,
            consistency: None,
            notes: Vec::new(),
        }
    }

    /// No reflection chain of this round failed.
    pub fn verified(&self) -> bool {
        self.existence.as_ref().is_none_or(|c| c.passed()) && self.consistency.as_ref().is_none_or(|c| c.passed())
    }

    pub fn keyframe_index(&self) -> Option<usize> {
        self.selection.as_ref().map(|s| s.keyframe_index)
    }
}

/// The audit transcript of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema: String,
    pub source_id: String,
    pub query: String,
    pub config: Config,
    pub status: SessionStatus,
    pub rounds: Vec<RoundRecord>,
    pub exchanges: Vec<Exchange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SessionLog {
    pub fn reflection_log(&self) -> ReflectionLog {
        let chains = self
            .rounds
            .iter()
            .flat_map(|r| r.existence.iter().chain(r.consistency.iter()).cloned())
            .collect();
        ReflectionLog::new(self.source_id.clone(), self.query.clone(), chains)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone)]
pub struct SessionResult {
    pub masklets: Vec<Masklet>,
    pub accepted: bool,
    pub status: SessionStatus,
    pub rounds_used: u32,
    pub log: SessionLog,
    pub transcript_path: Option<PathBuf>,
}

impl SessionResult {
    pub fn final_round(&self) -> &RoundRecord {
        self.log.rounds.last().expect("a finished session has at least one round")
    }

    pub fn keyframe_index(&self) -> Option<usize> {
        self.final_round().keyframe_index()
    }

    /// One optional keyframe box per returned masklet.
    pub fn boxes(&self) -> Vec<Option<NormBox>> {
        let targets = self
            .final_round()
            .grounding
            .as_ref()
            .map(|g| g.targets.as_slice())
            .unwrap_or_default();
        self.masklets
            .iter()
            .map(|m| targets.iter().find(|t| t.target_id == m.target_id).map(|t| t.bbox))
            .collect()
    }
}

/// A session aborted by an unrecoverable error, with the transcript so far.
#[derive(Debug, thiserror::Error)]
#[error("session failed: {error}")]
pub struct SessionFailure {
    #[source]
    pub error: Error,
    pub log: Box<SessionLog>,
}

/// Runs a session against `backend`, with retry policy and prompts taken
/// from `config`.
pub fn run_session(
    clip: &VideoClip,
    query: &str,
    config: &Config,
    backend: Arc<dyn ModelBackend>,
) -> std::result::Result<SessionResult, SessionFailure> {
    let client = BackendClient::new(backend, config.backends.retry_policy());
    let prompts = match PromptSet::load(config.prompts_dir.as_deref()) {
        Ok(p) => p,
        Err(error) => {
            return Err(SessionFailure {
                error,
                log: Box::new(empty_log(clip, query, config, &client)),
            })
        }
    };
    run_session_with(clip, query, config, &client, &prompts)
}

/// Runs a session with an explicit client and prompt set. Calls are logged
/// on a fork of `client`, so the transcript holds only this session.
pub fn run_session_with(
    clip: &VideoClip,
    query: &str,
    config: &Config,
    client: &BackendClient,
    prompts: &PromptSet,
) -> std::result::Result<SessionResult, SessionFailure> {
    let client = client.fork();
    let mut rounds = Vec::new();
    let outcome = config.validate().and_then(|_| {
        let ctx = StageContext {
            client: &client,
            prompts,
            config,
            clip,
            query,
        };
        drive(&ctx, &mut rounds)
    });
    let mut log = empty_log(clip, query, config, &client);
    log.rounds = rounds;
    match outcome {
        Ok((masklets, status)) => {
            log.status = status;
            let rounds_used = log.rounds.len() as u32;
            Ok(SessionResult {
                accepted: status == SessionStatus::Accepted && !masklets.is_empty(),
                masklets,
                status,
                rounds_used,
                log,
                transcript_path: None,
            })
        }
        Err(error) => {
            log.error = Some(error.to_string());
            Err(SessionFailure {
                error,
                log: Box::new(log),
            })
        }
    }
}

fn empty_log(clip: &VideoClip, query: &str, config: &Config, client: &BackendClient) -> SessionLog {
    SessionLog {
        schema: SESSION_LOG_SCHEMA.to_string(),
        source_id: clip.source_id().to_string(),
        query: query.to_string(),
        config: config.clone(),
        status: SessionStatus::Running,
        rounds: Vec::new(),
        exchanges: client.exchanges(),
        error: None,
    }
}

struct Carried {
    selection: FrameSelection,
    canvas: FocusCanvas,
}

#[allow(clippy::large_enum_variant)]
enum Step {
    Next {
        existence: Option<String>,
        consistency: Option<String>,
        carry: Option<Carried>,
    },
    Finish,
}

struct Loop<'c, 'a> {
    ctx: &'c StageContext<'a>,
    pool: Option<CandidatePool>,
    attributes: Option<Vec<AttributeSpec>>,
}

impl Loop<'_, '_> {
    fn pool(&mut self) -> Result<&CandidatePool> {
        if self.pool.is_none() {
            self.pool = Some(frame_selection::build_pool(self.ctx)?);
        }
        Ok(self.pool.as_ref().expect("pool just built"))
    }

    fn attributes(&mut self, round: u32) -> Result<Vec<AttributeSpec>> {
        if self.attributes.is_none() {
            let raw = reflection::decompose_attributes(self.ctx, round)?;
            self.attributes = Some(reflection::attributes_or_fallback(raw, self.ctx.query));
        }
        Ok(self.attributes.clone().expect("attributes just computed"))
    }

    fn compose(&self, selection: &FrameSelection) -> Result<FocusCanvas> {
        let layout = &self.ctx.config.layout;
        let plan = focus_layout::plan_for_mode(
            layout.mode,
            &selection.selected,
            selection.keyframe_index,
            self.ctx.clip.len(),
        )?;
        focus_layout::compose(self.ctx.clip, &plan, layout.cell_w, layout.cell_h, layout.label_frames)
    }
}

fn no_target_feedback(rec: &RoundRecord, keyframe: usize) -> String {
    let reasons: Vec<String> = rec
        .grounding
        .iter()
        .flat_map(|g| g.failures.iter())
        .map(|f| format!("target {} ({})", f.target_id, f.reason))
        .collect();
    if reasons.is_empty() {
        format!("No target object referred to by the query was identified in keyframe #{keyframe}.")
    } else {
        format!(
            "None of the described targets could be localized in keyframe #{keyframe}: {}. Describe each target so it can be found.",
            reasons.join("; ")
        )
    }
}

fn current(rounds: &mut [RoundRecord]) -> &mut RoundRecord {
    rounds.last_mut().expect("round record pushed at round start")
}

/// Runs rounds until verification passes or the budget is spent, then
/// segments once. Records are appended to `rounds` as they progress so a
/// failure still leaves a partial transcript.
fn drive(ctx: &StageContext<'_>, rounds: &mut Vec<RoundRecord>) -> Result<(Vec<Masklet>, SessionStatus)> {
    let cfg = ctx.config;
    let max_turn = cfg.reflection.max_turn;
    let reflect = max_turn > 0;
    let check_existence = reflect && cfg.reflection.existence;
    let check_consistency = reflect && cfg.reflection.consistency;
    let merge = cfg.pipeline.merge;
    let (w, h) = (ctx.clip.width(), ctx.clip.height());
    let mut lp = Loop {
        ctx,
        pool: None,
        attributes: None,
    };
    let mut existence_fb: Option<String> = None;
    let mut consistency_fb: Option<String> = None;
    let mut carry: Option<Carried> = None;
    let mut previous: Vec<TargetExpression> = Vec::new();
    let mut round = 1u32;
    loop {
        let budget_left = reflect && round < max_turn;
        let mut rec = RoundRecord::new(round);
        rec.existence_feedback_in = existence_fb.take();
        rec.consistency_feedback_in = consistency_fb.take();
        let ex_in = rec.existence_feedback_in.clone();
        let co_in = rec.consistency_feedback_in.clone();
        rounds.push(rec);

        let mut merged_boxes: Option<Vec<[f64; 4]>> = None;
        let mut merged_grounding: Option<Grounding> = None;
        let intent: Result<Vec<TargetExpression>>;
        let (selection, canvas) = match merge {
            MergeMode::None | MergeMode::IntentGround => {
                let (selection, canvas, reused) = match carry.take() {
                    Some(c) => (c.selection, c.canvas, true),
                    None => {
                        let pool = lp.pool()?;
                        let mut s = frame_selection::select_from_pool(ctx, pool, ex_in.as_deref(), round)?;
                        s.round = round;
                        let canvas = lp.compose(&s)?;
                        (s, canvas, false)
                    }
                };
                current(rounds).selection_reused = reused;
                if merge == MergeMode::IntentGround {
                    let keyframe = ctx.clip.frame(selection.keyframe_index);
                    intent = agents::merged_intent_ground(ctx, &canvas, keyframe, co_in.as_deref(), round, &previous)
                        .map(|(e, g)| {
                            merged_grounding = Some(g);
                            e
                        });
                } else {
                    intent = agents::analyze_intent(ctx, &canvas, co_in.as_deref(), round, &previous);
                }
                (selection, canvas)
            }
            MergeMode::SelectIntent | MergeMode::All => {
                if carry.take().is_some() {
                    current(rounds)
                        .notes
                        .push("merged selection re-issued; carried selection not applied".into());
                }
                let pool = lp.pool()?.clone();
                let (scores, exprs) = if merge == MergeMode::All {
                    let (s, e, b) =
                        agents::merged_all(ctx, &pool, ex_in.as_deref(), co_in.as_deref(), round, &previous)?;
                    merged_boxes = Some(b);
                    (s, Ok(e))
                } else {
                    let (s, e) =
                        agents::merged_select_intent(ctx, &pool, ex_in.as_deref(), co_in.as_deref(), round, &previous)?;
                    (s, Ok(e))
                };
                let selection = frame_selection::pick_with_scores(ctx, &pool, &scores, round)?;
                let canvas = lp.compose(&selection)?;
                intent = exprs;
                (selection, canvas)
            }
        };
        let keyframe_index = selection.keyframe_index;
        {
            let rec = current(rounds);
            rec.selection = Some(selection.clone());
            rec.canvas = Some(canvas.clone());
        }

        let expressions = match intent {
            Ok(e) => e,
            Err(Error::IntentFailure) => {
                let rec = current(rounds);
                rec.notes.push(Error::IntentFailure.to_string());
                let fb = no_target_feedback(rec, keyframe_index);
                match next_or_finish(budget_left, None, Some(fb), Some(Carried { selection, canvas }), merge) {
                    Step::Next {
                        existence,
                        consistency,
                        carry: c,
                    } => {
                        existence_fb = existence;
                        consistency_fb = consistency;
                        carry = c;
                        round += 1;
                        continue;
                    }
                    Step::Finish => return Ok((Vec::new(), SessionStatus::Exhausted)),
                }
            }
            Err(e) => return Err(e),
        };
        previous = expressions.clone();
        current(rounds).expressions = expressions.clone();

        if check_existence {
            let chain = reflection::existence_reflect(ctx, &selection, &canvas, &expressions, round)?;
            let failed = !chain.passed();
            let fb = chain.feedback.clone();
            current(rounds).existence = Some(chain);
            if failed && budget_left {
                existence_fb = Some(fb);
                round += 1;
                continue;
            }
        }

        let keyframe = ctx.clip.frame(keyframe_index);
        let grounding = match (merged_grounding, merged_boxes) {
            (Some(g), _) => g,
            (None, Some(b)) => agents::grounding_from_boxes(&expressions, &b, w, h),
            (None, None) => agents::ground_all(ctx, keyframe, &expressions, round)?,
        };
        current(rounds).grounding = Some(grounding.clone());

        if grounding.targets.is_empty() {
            let fb = no_target_feedback(current(rounds), keyframe_index);
            match next_or_finish(budget_left, None, Some(fb), Some(Carried { selection, canvas }), merge) {
                Step::Next {
                    existence,
                    consistency,
                    carry: c,
                } => {
                    existence_fb = existence;
                    consistency_fb = consistency;
                    carry = c;
                    round += 1;
                    continue;
                }
                Step::Finish => return Ok((Vec::new(), SessionStatus::Exhausted)),
            }
        }

        if check_consistency {
            let attributes = lp.attributes(round)?;
            let chain = reflection::consistency_reflect(ctx, keyframe, &grounding.targets, &attributes, round)?;
            let failed = !chain.passed();
            let fb = chain.feedback.clone();
            current(rounds).consistency = Some(chain);
            if failed && budget_left {
                consistency_fb = Some(fb);
                carry = Some(Carried { selection, canvas });
                round += 1;
                continue;
            }
        }

        let status = if current(rounds).verified() {
            SessionStatus::Accepted
        } else {
            SessionStatus::Exhausted
        };
        let masklets = segment(ctx, keyframe_index, &grounding, round)?;
        return Ok((masklets, status));
    }
}

fn next_or_finish(
    budget_left: bool,
    existence: Option<String>,
    consistency: Option<String>,
    carry: Option<Carried>,
    merge: MergeMode,
) -> Step {
    if !budget_left {
        return Step::Finish;
    }
    Step::Next {
        existence,
        consistency,
        carry: if merge.merges_selection() { None } else { carry },
    }
}

fn segment(ctx: &StageContext<'_>, keyframe_index: usize, grounding: &Grounding, round: u32) -> Result<Vec<Masklet>> {
    let frames = ctx
        .clip
        .frames()
        .iter()
        .map(WireImage::encode)
        .collect::<Result<Vec<_>>>()?;
    let boxes: Vec<NormBox> = grounding.targets.iter().map(|t| t.bbox).collect();
    let ids: Vec<usize> = grounding.targets.iter().map(|t| t.target_id).collect();
    let req = SegmentRequest::new(RequestMeta::new(round, AgentRole::Segmenter), frames, keyframe_index, boxes);
    ctx.client.segment(&req, &ids, ctx.clip.width(), ctx.clip.height())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultSummary {
    pub source_id: String,
    pub query: String,
    pub status: SessionStatus,
    pub accepted: bool,
    pub rounds_used: u32,
    pub keyframe_index: Option<usize>,
    pub target_ids: Vec<usize>,
}

impl ResultSummary {
    pub fn of(result: &SessionResult) -> Self {
        Self {
            source_id: result.log.source_id.clone(),
            query: result.log.query.clone(),
            status: result.status,
            accepted: result.accepted,
            rounds_used: result.rounds_used,
            keyframe_index: result.keyframe_index(),
            target_ids: result.masklets.iter().map(|m| m.target_id).collect(),
        }
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)?;
    Ok(())
}

/// Writes masks (PNG per frame and RLE JSON), overlays, the session log, a
/// result summary and, when asked, the reflection log and per-round canvases.
/// Sets `result.transcript_path`.
pub fn write_session_outputs(
    result: &mut SessionResult,
    clip: &VideoClip,
    out_dir: &Path,
    dump_reflection: bool,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    video_io::write_masklets(clip, &result.masklets, &out_dir.join("masks"), MaskFormat::PngPerFrame)?;
    video_io::write_masklets(clip, &result.masklets, &out_dir.join("rle"), MaskFormat::RleJson)?;
    let boxes = result.boxes();
    video_io::render_overlay(clip, &result.masklets, Some(&boxes), &out_dir.join("overlays"), 0.5)?;
    if result.log.config.layout.debug_dump {
        let dir = out_dir.join("canvases");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for r in &result.log.rounds {
            if let Some(c) = &r.canvas {
                save_png(&c.image, &dir.join(format!("round_{}.png", r.round)))?;
            }
        }
    }
    if dump_reflection {
        write_json(&out_dir.join(REFLECTION_LOG_FILE), &result.log.reflection_log())?;
    }
    write_json(&out_dir.join(RESULT_FILE), &ResultSummary::of(result))?;
    let transcript = out_dir.join(SESSION_LOG_FILE);
    result.log.save(&transcript)?;
    result.transcript_path = Some(transcript);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::mock::{MatchKey, MockBackend, MockEntry, MockScenario};
    use crate::backend::protocol::ResponseTag;
    use serde_json::json;

    fn clip() -> VideoClip {
        let frames = (0..6u8)
            .map(|i| RgbImage::from_pixel(64, 48, image::Rgb([i * 30, 10, 10])))
            .collect();
        VideoClip::new(frames, "unit").unwrap()
    }

    fn config() -> Config {
        let mut c = Config::default();
        c.selection.n = 4;
        c.selection.k = 3;
        c.layout.cell_w = 32;
        c.layout.cell_h = 32;
        c
    }

    fn scenario(answers_yes: bool) -> MockScenario {
        let yes = if answers_yes { "yes" } else { "no" };
        MockScenario::new()
            .with_entry(MockEntry::reply(MatchKey::similarity(), json!([0.1, 0.9, 0.2, 0.3, 0.8, 0.4])))
            .with_entry(MockEntry::reply(
                MatchKey::chat(ResponseTag::FrameScores),
                json!({"scores": [10, 90, 30, 50]}),
            ))
            .with_entry(MockEntry::reply(
                MatchKey::chat(ResponseTag::Expressions),
                json!({"expressions": ["the bright square"]}),
            ))
            .with_entry(MockEntry::reply(
                MatchKey::chat(ResponseTag::Box),
                json!({"box": [0.1, 0.1, 0.5, 0.5]}),
            ))
            .with_entry(MockEntry::reply(
                MatchKey::chat(ResponseTag::Questions).role(AgentRole::ExistenceQuestioner),
                json!({"questions": [
                    {"question": "Is the object visible?", "kind": "visibility"},
                    {"question": "Is the whole object shown?", "kind": "completeness"},
                    {"question": "Is there a better frame?", "kind": "optimality"}
                ]}),
            ))
            .with_entry(MockEntry::reply(
                MatchKey::chat(ResponseTag::QaAnswers).role(AgentRole::ExistenceResponder),
                json!({"answers": [
                    {"answer": yes, "explanation": "seen"},
                    {"answer": "yes", "explanation": "whole"},
                    {"answer": "no", "explanation": "best"}
                ]}),
            ))
    }

    fn run(cfg: &Config, s: MockScenario) -> (SessionResult, Arc<MockBackend>) {
        let mock = Arc::new(MockBackend::new(s).unwrap());
        let mut cfg = cfg.clone();
        cfg.backends.retry_backoff_ms = 0;
        let r = run_session(&clip(), "bright square", &cfg, mock.clone()).unwrap();
        (r, mock)
    }

    #[test]
    fn passing_existence_accepts_in_one_round() {
        let mut cfg = config();
        cfg.reflection.consistency = false;
        let (r, mock) = run(&cfg, scenario(true));
        assert_eq!(r.rounds_used, 1);
        assert_eq!(r.status, SessionStatus::Accepted);
        assert!(r.accepted);
        assert_eq!(r.masklets.len(), 1);
        assert_eq!(mock.calls().iter().filter(|c| c.tag == "segment").count(), 1);
    }

    #[test]
    fn failing_existence_exhausts_budget_and_still_segments() {
        let mut cfg = config();
        cfg.reflection.consistency = false;
        cfg.reflection.max_turn = 3;
        let (r, mock) = run(&cfg, scenario(false));
        assert_eq!(r.rounds_used, 3);
        assert_eq!(r.status, SessionStatus::Exhausted);
        assert_eq!(mock.calls().iter().filter(|c| c.tag == "segment").count(), 1);
        assert!(r.log.rounds[0].grounding.is_none());
        assert!(r.log.rounds[2].grounding.is_some());
        assert_eq!(
            r.log.rounds[1].existence_feedback_in.as_deref(),
            Some(r.log.rounds[0].existence.as_ref().unwrap().feedback.as_str())
        );
    }

    #[test]
    fn zero_budget_issues_no_reflection_calls() {
        let mut cfg = config();
        cfg.reflection.max_turn = 0;
        let (r, mock) = run(&cfg, scenario(false));
        assert_eq!(r.rounds_used, 1);
        assert_eq!(r.status, SessionStatus::Accepted);
        assert!(mock.calls().iter().all(|c| !c.role.is_reflection()));
    }

    #[test]
    fn failure_keeps_partial_transcript() {
        let s = MockScenario::new().with_entry(MockEntry::reply(MatchKey::similarity(), json!([0.1, 0.9, 0.2, 0.3, 0.8, 0.4])));
        let mock = Arc::new(MockBackend::new(s).unwrap());
        let mut cfg = config();
        cfg.backends.retry_backoff_ms = 0;
        let err = run_session(&clip(), "q", &cfg, mock).unwrap_err();
        assert!(matches!(err.error, Error::ScriptedGap { .. }));
        assert_eq!(err.log.rounds.len(), 1);
        assert!(err.log.error.is_some());
        assert!(!err.log.exchanges.is_empty());
    }

    #[test]
    fn outputs_are_written() {
        let mut cfg = config();
        cfg.reflection.consistency = false;
        cfg.layout.debug_dump = true;
        let (mut r, _) = run(&cfg, scenario(true));
        let dir = tempfile::tempdir().unwrap();
        write_session_outputs(&mut r, &clip(), dir.path(), true).unwrap();
        for f in [SESSION_LOG_FILE, REFLECTION_LOG_FILE, RESULT_FILE, "rle/masklets.json", "canvases/round_1.png"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let log: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join(SESSION_LOG_FILE)).unwrap()).unwrap();
        assert_eq!(log["schema"], SESSION_LOG_SCHEMA);
        assert_eq!(log["status"], "accepted");
    }
}
