//! Intent analysis over the focus canvas and per-target grounding on the
//! keyframe, plus the merged single-call variants used for ablations.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::backend::{AgentRole, ChatRequest, ExpressionBox, Reply, RequestMeta, ResponseTag, WireImage};
use crate::context::{feedback_section, StageContext};
use crate::error::{Error, Result};
use crate::focus_layout::FocusCanvas;
use crate::frame_selection::{frame_list, rescore_instruction, scale_mllm_scores, CandidatePool};
use crate::geometry::NormBox;
use crate::prompts::PromptKind;

pub const MAX_EXPRESSION_CHARS: usize = 200;
pub const MIN_BOX_AREA: f64 = 1e-4;
/// Replies with any coordinate above this are read as pixels.
pub const PIXEL_COORD_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetExpression {
    pub target_id: usize,
    pub expression: String,
    pub revision: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedTarget {
    pub target_id: usize,
    #[serde(rename = "box")]
    pub bbox: NormBox,
    pub expression: TargetExpression,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingFailureRecord {
    pub target_id: usize,
    pub reason: String,
}

/// Grounding outcome for one round: kept targets and dropped ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub targets: Vec<GroundedTarget>,
    pub failures: Vec<GroundingFailureRecord>,
}

fn intent_instruction() -> &'static str {
    "Revise the target expressions so that they agree with this report."
}

/// Trims, drops blanks, truncates each to the length cap and keeps at most
/// `max_targets`.
pub fn clean_expressions(raw: Vec<String>, max_targets: usize) -> Vec<String> {
    let mut out: Vec<String> = raw
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .map(|s| {
            if s.chars().count() > MAX_EXPRESSION_CHARS {
                s.chars().take(MAX_EXPRESSION_CHARS).collect::<String>().trim_end().to_string()
            } else {
                s
            }
        })
        .collect();
    if out.len() > max_targets {
        log::warn!("{} expressions returned, keeping the first {max_targets}", out.len());
        out.truncate(max_targets);
    }
    out
}

/// Dense ids from 0; a revision bumps when the text for an id changes.
pub fn assign_revisions(previous: &[TargetExpression], texts: Vec<String>) -> Vec<TargetExpression> {
    texts
        .into_iter()
        .enumerate()
        .map(|(id, expression)| {
            let revision = match previous.iter().find(|p| p.target_id == id) {
                Some(p) if p.expression == expression => p.revision,
                Some(p) => p.revision + 1,
                None => 0,
            };
            TargetExpression {
                target_id: id,
                expression,
                revision,
            }
        })
        .collect()
}

fn build_expressions(
    raw: Vec<String>,
    max_targets: usize,
    previous: &[TargetExpression],
) -> Result<Vec<TargetExpression>> {
    let texts = clean_expressions(raw, max_targets);
    if texts.is_empty() {
        return Err(Error::IntentFailure);
    }
    Ok(assign_revisions(previous, texts))
}

/// Target expressions for the objects the query refers to.
pub fn analyze_intent(
    ctx: &StageContext<'_>,
    canvas: &FocusCanvas,
    feedback: Option<&str>,
    round: u32,
    previous: &[TargetExpression],
) -> Result<Vec<TargetExpression>> {
    let max = ctx.config.agents.max_targets;
    let fb = feedback_section(feedback, intent_instruction());
    let legend = canvas.legend();
    let max_s = max.to_string();
    let prompt = ctx.prompts.render(
        PromptKind::Intent,
        &[("query", ctx.query), ("legend", &legend), ("feedback", &fb), ("max_targets", &max_s)],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::IntentAnalyst),
        ResponseTag::Expressions,
        prompt.system,
        prompt.user,
        vec![WireImage::encode(&canvas.image)?],
    );
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::Expressions(e) => Ok(e),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    build_expressions(out.value, max, previous)
}

/// Normalizes a model box for an image of `width`×`height`.
pub fn normalize_box(raw: [f64; 4], width: u32, height: u32) -> std::result::Result<NormBox, String> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(format!("non-finite coordinate in {raw:?}"));
    }
    let pixels = raw.iter().any(|&v| v > PIXEL_COORD_THRESHOLD);
    let [mut x1, mut y1, mut x2, mut y2] = raw;
    if pixels {
        let (w, h) = (width as f64, height as f64);
        x1 /= w;
        x2 /= w;
        y1 /= h;
        y2 /= h;
    }
    let c = |v: f64| v.clamp(0.0, 1.0);
    let b = NormBox::new(c(x1.min(x2)), c(y1.min(y2)), c(x1.max(x2)), c(y1.max(y2)));
    if b.area() < MIN_BOX_AREA {
        return Err(format!("degenerate box {raw:?}"));
    }
    Ok(b)
}

/// Box for one expression on the full-resolution keyframe.
pub fn ground_target(
    ctx: &StageContext<'_>,
    keyframe: &RgbImage,
    expr: &TargetExpression,
    round: u32,
) -> Result<GroundedTarget> {
    let (w, h) = keyframe.dimensions();
    let (ws, hs) = (w.to_string(), h.to_string());
    let prompt = ctx.prompts.render(
        PromptKind::Grounding,
        &[("expression", &expr.expression), ("width", &ws), ("height", &hs)],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::Grounder).with_target(expr.target_id),
        ResponseTag::Box,
        prompt.system,
        prompt.user,
        vec![WireImage::encode(keyframe)?],
    );
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::Box(b) => Ok(b),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    let bbox = normalize_box(out.value, w, h).map_err(|reason| Error::GroundingFailure {
        target_id: expr.target_id,
        reason,
    })?;
    Ok(GroundedTarget {
        target_id: expr.target_id,
        bbox,
        expression: expr.clone(),
    })
}

/// Grounds every expression; degenerate boxes drop their target.
pub fn ground_all(
    ctx: &StageContext<'_>,
    keyframe: &RgbImage,
    exprs: &[TargetExpression],
    round: u32,
) -> Result<Grounding> {
    let mut g = Grounding::default();
    for e in exprs {
        match ground_target(ctx, keyframe, e, round) {
            Ok(t) => g.targets.push(t),
            Err(Error::GroundingFailure { target_id, reason }) => {
                log::warn!("target {target_id} dropped: {reason}");
                g.failures.push(GroundingFailureRecord { target_id, reason });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(g)
}

fn boxes_to_grounding(exprs: &[TargetExpression], raw: &[[f64; 4]], width: u32, height: u32) -> Grounding {
    let mut g = Grounding::default();
    for (e, b) in exprs.iter().zip(raw) {
        match normalize_box(*b, width, height) {
            Ok(bbox) => g.targets.push(GroundedTarget {
                target_id: e.target_id,
                bbox,
                expression: e.clone(),
            }),
            Err(reason) => g.failures.push(GroundingFailureRecord {
                target_id: e.target_id,
                reason,
            }),
        }
    }
    g
}

fn split_targets(
    targets: Vec<ExpressionBox>,
    max_targets: usize,
    previous: &[TargetExpression],
) -> Result<(Vec<TargetExpression>, Vec<[f64; 4]>)> {
    let kept: Vec<ExpressionBox> = targets
        .into_iter()
        .filter(|t| !t.expression.trim().is_empty())
        .take(max_targets)
        .collect();
    let boxes = kept.iter().map(|t| t.bbox).collect();
    let exprs = build_expressions(kept.into_iter().map(|t| t.expression).collect(), max_targets, previous)?;
    Ok((exprs, boxes))
}

fn combined_feedback(existence: Option<&str>, consistency: Option<&str>) -> String {
    let mut s = feedback_section(existence, rescore_instruction());
    s.push_str(&feedback_section(consistency, intent_instruction()));
    s
}

fn candidate_images(ctx: &StageContext<'_>, pool: &CandidatePool) -> Result<Vec<WireImage>> {
    pool.frame_indices
        .iter()
        .map(|&i| WireImage::encode(ctx.clip.frame(i)))
        .collect()
}

/// Frame scores and expressions from one call.
pub fn merged_select_intent(
    ctx: &StageContext<'_>,
    pool: &CandidatePool,
    existence_feedback: Option<&str>,
    consistency_feedback: Option<&str>,
    round: u32,
    previous: &[TargetExpression],
) -> Result<(Vec<f64>, Vec<TargetExpression>)> {
    let max = ctx.config.agents.max_targets;
    let (count, list, max_s) = (pool.len().to_string(), frame_list(&pool.frame_indices), max.to_string());
    let fb = combined_feedback(existence_feedback, consistency_feedback);
    let prompt = ctx.prompts.render(
        PromptKind::MergedSelectIntent,
        &[
            ("query", ctx.query),
            ("count", &count),
            ("frame_list", &list),
            ("feedback", &fb),
            ("max_targets", &max_s),
        ],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::MergedSelectIntent),
        ResponseTag::ScoresAndExpressions,
        prompt.system,
        prompt.user,
        candidate_images(ctx, pool)?,
    );
    let n = pool.len();
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::ScoresAndExpressions { scores, expressions } if scores.len() == n => {
            Ok((scale_mllm_scores(&scores)?, expressions))
        }
        Reply::ScoresAndExpressions { scores, .. } => Err(format!("{} scores for {n} frames", scores.len())),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    let (scores, raw) = out.value;
    Ok((scores, build_expressions(raw, max, previous)?))
}

/// Expressions and their keyframe boxes from one call.
pub fn merged_intent_ground(
    ctx: &StageContext<'_>,
    canvas: &FocusCanvas,
    keyframe: &RgbImage,
    feedback: Option<&str>,
    round: u32,
    previous: &[TargetExpression],
) -> Result<(Vec<TargetExpression>, Grounding)> {
    let max = ctx.config.agents.max_targets;
    let (w, h) = keyframe.dimensions();
    let key = canvas.keyframe_slot().frame_index.to_string();
    let (legend, ws, hs, max_s) = (canvas.legend(), w.to_string(), h.to_string(), max.to_string());
    let fb = feedback_section(feedback, intent_instruction());
    let prompt = ctx.prompts.render(
        PromptKind::MergedIntentGround,
        &[
            ("query", ctx.query),
            ("keyframe", &key),
            ("legend", &legend),
            ("width", &ws),
            ("height", &hs),
            ("feedback", &fb),
            ("max_targets", &max_s),
        ],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::MergedIntentGround),
        ResponseTag::ExpressionsAndBoxes,
        prompt.system,
        prompt.user,
        vec![WireImage::encode(&canvas.image)?, WireImage::encode(keyframe)?],
    );
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::ExpressionsAndBoxes(t) => Ok(t),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    let (exprs, boxes) = split_targets(out.value, max, previous)?;
    let g = boxes_to_grounding(&exprs, &boxes, w, h);
    Ok((exprs, g))
}

/// Scores, expressions and raw boxes from one call. Boxes are interpreted on
/// the keyframe chosen after fusion.
/// Frame scores, expressions and boxes from one merged call.
pub type MergedAll = (Vec<f64>, Vec<TargetExpression>, Vec<[f64; 4]>);

pub fn merged_all(
    ctx: &StageContext<'_>,
    pool: &CandidatePool,
    existence_feedback: Option<&str>,
    consistency_feedback: Option<&str>,
    round: u32,
    previous: &[TargetExpression],
) -> Result<MergedAll> {
    let max = ctx.config.agents.max_targets;
    let (count, list, max_s) = (pool.len().to_string(), frame_list(&pool.frame_indices), max.to_string());
    let fb = combined_feedback(existence_feedback, consistency_feedback);
    let prompt = ctx.prompts.render(
        PromptKind::MergedAll,
        &[
            ("query", ctx.query),
            ("count", &count),
            ("frame_list", &list),
            ("feedback", &fb),
            ("max_targets", &max_s),
        ],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::MergedAll),
        ResponseTag::ScoresAndTargets,
        prompt.system,
        prompt.user,
        candidate_images(ctx, pool)?,
    );
    let n = pool.len();
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::ScoresAndTargets { scores, targets } if scores.len() == n => Ok((scale_mllm_scores(&scores)?, targets)),
        Reply::ScoresAndTargets { scores, .. } => Err(format!("{} scores for {n} frames", scores.len())),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    let (scores, targets) = out.value;
    let (exprs, boxes) = split_targets(targets, max, previous)?;
    Ok((scores, exprs, boxes))
}

/// Grounding from boxes already returned by a merged call.
pub fn grounding_from_boxes(exprs: &[TargetExpression], boxes: &[[f64; 4]], width: u32, height: u32) -> Grounding {
    boxes_to_grounding(exprs, boxes, width, height)
}
