//! Questioner/Responder verification chains.
//!
//! Existence reflection asks whether the keyframe shows the targets clearly,
//! covers all of them and is the best available frame. Consistency
//! reflection asks multiple-choice questions about each grounded target's
//! attributes and fails when too many targets contradict the query.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::agents::{GroundedTarget, TargetExpression};
use crate::backend::{
    AgentRole, AttributeLevel, AttributeSpec, ChatRequest, GeneratedQuestion, QaAnswer, QuestionKind, Reply,
    RequestMeta, ResponseTag, WireImage,
};
use crate::context::StageContext;
use crate::draw;
use crate::error::{Error, Result};
use crate::focus_layout::FocusCanvas;
use crate::frame_selection::FrameSelection;
use crate::prompts::PromptKind;

pub const REFLECTION_LOG_SCHEMA: &str = "reflection-log/1";

const EXISTENCE_ASPECTS: [QuestionKind; 3] =
    [QuestionKind::Visibility, QuestionKind::Completeness, QuestionKind::Optimality];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Existence,
    Consistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionQA {
    pub question: String,
    pub kind: QuestionKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    pub answer: String,
    pub explanation: String,
    /// Consistency stage: whether the answer matches the query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    /// Whether this entry supports the current prediction.
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub better_frame: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionChain {
    pub stage: Stage,
    pub round: u32,
    pub entries: Vec<ReflectionQA>,
    pub verdict: Verdict,
    /// Non-empty exactly when the verdict is fail.
    pub feedback: String,
}

impl ReflectionChain {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionLog {
    pub schema: String,
    pub source_id: String,
    pub query: String,
    pub chains: Vec<ReflectionChain>,
}

impl ReflectionLog {
    pub fn new(source_id: impl Into<String>, query: impl Into<String>, chains: Vec<ReflectionChain>) -> Self {
        Self {
            schema: REFLECTION_LOG_SCHEMA.to_string(),
            source_id: source_id.into(),
            query: query.into(),
            chains,
        }
    }
}

/// Reads a yes/no answer from its first word.
pub fn is_affirmative(answer: &str) -> Option<bool> {
    let word: String = answer
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" | "y" | "true" | "correct" => Some(true),
        "no" | "n" | "false" | "incorrect" => Some(false),
        _ => None,
    }
}

/// First `frame N` / `frame #N` mention in `text`.
pub fn parse_frame_mention(text: &str) -> Option<usize> {
    let lower = text.to_lowercase();
    let mut from = 0;
    while let Some(at) = lower[from..].find("frame") {
        let rest = &lower[from + at + "frame".len()..];
        let rest = rest.trim_start_matches([' ', '#']);
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if !digits.is_empty() {
            return digits.parse().ok();
        }
        from += at + "frame".len();
    }
    None
}

/// Aspect of an existence question, from its wording.
pub fn infer_kind(question: &str) -> Option<QuestionKind> {
    let q = question.to_lowercase();
    if q.contains("better") {
        Some(QuestionKind::Optimality)
    } else if q.contains("visible") || q.contains("visibility") {
        Some(QuestionKind::Visibility)
    } else if q.contains("cover") || q.contains("complete") || q.contains("all the") {
        Some(QuestionKind::Completeness)
    } else {
        None
    }
}

/// Index of the choice an answer selects: exact text first, then a leading
/// choice letter (`"B"`, `"b)"`, `"(B) red"`).
pub fn resolve_choice(answer: &str, choices: &[String]) -> Option<usize> {
    let a = answer.trim();
    if let Some(i) = choices.iter().position(|c| c.trim().eq_ignore_ascii_case(a)) {
        return Some(i);
    }
    let a = a.trim_start_matches(['(', '[', ' ']);
    let mut chars = a.chars();
    let first = chars.next()?;
    let boundary = chars.next().is_none_or(|c| !c.is_alphanumeric());
    if first.is_ascii_alphabetic() && boundary {
        let i = (first.to_ascii_uppercase() as u8 - b'A') as usize;
        if i < choices.len() {
            return Some(i);
        }
    }
    None
}

fn choice_letter(i: usize) -> char {
    (b'A' + (i as u8 % 26)) as char
}

/// Pass/fail for a target set: a single target must be consistent; several
/// fail when the inconsistent fraction strictly exceeds `threshold`.
pub fn consistency_passes(target_count: usize, inconsistent: usize, threshold: f64) -> bool {
    if target_count <= 1 {
        inconsistent == 0
    } else {
        inconsistent as f64 / target_count as f64 <= threshold
    }
}

fn quoted_list(exprs: &[TargetExpression]) -> String {
    exprs
        .iter()
        .map(|e| format!("\"{}\"", e.expression))
        .collect::<Vec<_>>()
        .join(", ")
}

fn numbered(lines: impl Iterator<Item = String>) -> String {
    lines
        .enumerate()
        .map(|(i, l)| format!("{}. {l}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn ask_existence_questions(
    ctx: &StageContext<'_>,
    canvas_image: &WireImage,
    vars: &[(&str, &str)],
    round: u32,
) -> Result<Vec<(QuestionKind, String)>> {
    let prompt = ctx.prompts.render(PromptKind::ExistenceQuestioner, vars)?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::ExistenceQuestioner),
        ResponseTag::Questions,
        prompt.system,
        prompt.user,
        vec![canvas_image.clone()],
    );
    let mut missing = Vec::new();
    for attempt in 0..2 {
        let out = ctx.client.chat_with(&req, |reply| match reply {
            Reply::Questions(q) if !q.is_empty() => Ok(q),
            Reply::Questions(_) => Err("no questions".into()),
            other => Err(format!("unexpected reply {other:?}")),
        })?;
        let questions: Vec<(QuestionKind, String)> = out
            .value
            .into_iter()
            .filter_map(|q| {
                let kind = q.kind.or_else(|| infer_kind(&q.question))?;
                EXISTENCE_ASPECTS.contains(&kind).then_some((kind, q.question))
            })
            .collect();
        missing = EXISTENCE_ASPECTS
            .iter()
            .filter(|a| !questions.iter().any(|(k, _)| k == *a))
            .copied()
            .collect();
        if missing.is_empty() {
            return Ok(questions);
        }
        if attempt == 0 {
            log::warn!("existence questions miss {missing:?}; regenerating");
        }
    }
    Err(Error::MissingAspect(
        missing.iter().map(|k| format!("{k:?}").to_lowercase()).collect::<Vec<_>>().join(", "),
    ))
}

/// Verifies the keyframe against the query and the round's expressions.
pub fn existence_reflect(
    ctx: &StageContext<'_>,
    selection: &FrameSelection,
    canvas: &FocusCanvas,
    expressions: &[TargetExpression],
    round: u32,
) -> Result<ReflectionChain> {
    let canvas_image = WireImage::encode(&canvas.image)?;
    let exprs = quoted_list(expressions);
    let key = selection.keyframe_index.to_string();
    let context = canvas
        .context_frames()
        .iter()
        .map(|f| format!("#{f}"))
        .collect::<Vec<_>>()
        .join(", ");
    let context = if context.is_empty() { "none".to_string() } else { context };
    let questions = ask_existence_questions(
        ctx,
        &canvas_image,
        &[("query", ctx.query), ("expressions", &exprs), ("keyframe", &key), ("context", &context)],
        round,
    )?;

    let listing = numbered(questions.iter().map(|(_, q)| q.clone()));
    let prompt = ctx.prompts.render(
        PromptKind::ExistenceResponder,
        &[("query", ctx.query), ("expressions", &exprs), ("keyframe", &key), ("questions", &listing)],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::ExistenceResponder),
        ResponseTag::QaAnswers,
        prompt.system,
        prompt.user,
        vec![canvas_image],
    );
    let n = questions.len();
    let answers = ctx
        .client
        .chat_with(&req, |reply| match reply {
            Reply::QaAnswers(a) if a.len() == n => Ok(a),
            Reply::QaAnswers(a) => Err(format!("{} answers for {n} questions", a.len())),
            other => Err(format!("unexpected reply {other:?}")),
        })?
        .value;

    let entries: Vec<ReflectionQA> = questions
        .into_iter()
        .zip(answers)
        .map(|((kind, question), a)| judge_existence(kind, question, a, selection.keyframe_index))
        .collect();
    Ok(assemble_existence(entries, round))
}

fn judge_existence(kind: QuestionKind, question: String, a: QaAnswer, keyframe: usize) -> ReflectionQA {
    let yes = is_affirmative(&a.answer);
    let (passed, better_frame) = match kind {
        QuestionKind::Optimality => {
            let better = a
                .better_frame
                .or_else(|| {
                    (yes != Some(false))
                        .then(|| parse_frame_mention(&a.explanation).or_else(|| parse_frame_mention(&a.answer)))
                        .flatten()
                })
                .filter(|&f| f != keyframe);
            (yes != Some(true) && better.is_none(), better)
        }
        _ => (yes == Some(true), None),
    };
    ReflectionQA {
        question,
        kind,
        choices: Vec::new(),
        answer: a.answer,
        explanation: a.explanation,
        correct: None,
        passed,
        target_id: None,
        attribute: None,
        gold: None,
        better_frame,
    }
}

/// Verdict and feedback from judged existence entries.
pub fn assemble_existence(entries: Vec<ReflectionQA>, round: u32) -> ReflectionChain {
    let failing: Vec<&ReflectionQA> = entries.iter().filter(|e| !e.passed).collect();
    let mut parts: Vec<String> = failing
        .iter()
        .map(|e| {
            let ex = e.explanation.trim();
            if ex.is_empty() {
                format!("{} Answer: {}.", e.question.trim(), e.answer.trim())
            } else {
                ex.to_string()
            }
        })
        .collect();
    if let Some(f) = failing.iter().find_map(|e| e.better_frame) {
        parts.push(format!("Context frame {f} is a better keyframe; promote frame {f} to keyframe."));
    }
    let verdict = if failing.is_empty() { Verdict::Pass } else { Verdict::Fail };
    ReflectionChain {
        stage: Stage::Existence,
        round,
        entries,
        verdict,
        feedback: parts.join(" "),
    }
}

/// Attributes the query requires; falls back to the query itself.
pub fn decompose_attributes(ctx: &StageContext<'_>, round: u32) -> Result<Vec<AttributeSpec>> {
    if ctx.query.trim().is_empty() {
        return Err(Error::InvalidInput("empty query".into()));
    }
    let prompt = ctx.prompts.render(PromptKind::AttributeDecomposer, &[("query", ctx.query)])?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::AttributeDecomposer),
        ResponseTag::Attributes,
        prompt.system,
        prompt.user,
        Vec::new(),
    );
    let attrs = ctx
        .client
        .chat_with(&req, |reply| match reply {
            Reply::Attributes(a) => Ok(a),
            other => Err(format!("unexpected reply {other:?}")),
        })?
        .value;
    Ok(attributes_or_fallback(attrs, ctx.query))
}

pub fn attributes_or_fallback(attrs: Vec<AttributeSpec>, query: &str) -> Vec<AttributeSpec> {
    let kept: Vec<AttributeSpec> = attrs.into_iter().filter(|a| !a.attribute.trim().is_empty()).collect();
    if kept.is_empty() {
        vec![AttributeSpec {
            attribute: query.trim().to_string(),
            level: AttributeLevel::High,
        }]
    } else {
        kept
    }
}

/// Keyframe with each target's box outlined and numbered.
pub fn annotate_targets(keyframe: &RgbImage, targets: &[GroundedTarget]) -> RgbImage {
    let mut img = keyframe.clone();
    let (w, h) = img.dimensions();
    let thickness = (w.min(h) / 150).max(1);
    let scale = (h / 180).max(1);
    for t in targets {
        let rect = t.bbox.to_pixels(w, h);
        draw::draw_outline(&mut img, &rect, draw::target_color(t.target_id), thickness);
        draw::draw_label(&mut img, rect.x0, rect.y0, &format!("#{}", t.target_id), scale);
    }
    img
}

struct CheckedQuestion {
    q: GeneratedQuestion,
    target_id: usize,
    gold: usize,
}

fn check_consistency_questions(
    questions: Vec<GeneratedQuestion>,
    targets: &[GroundedTarget],
) -> std::result::Result<Vec<CheckedQuestion>, String> {
    let mut out = Vec::with_capacity(questions.len());
    for (i, q) in questions.into_iter().enumerate() {
        let target_id = q.target_id.ok_or(format!("question {} has no target_id", i + 1))?;
        if !targets.iter().any(|t| t.target_id == target_id) {
            return Err(format!("question {} names unknown target {target_id}", i + 1));
        }
        if q.choices.len() < 2 {
            return Err(format!("question {} has fewer than two choices", i + 1));
        }
        let gold = q
            .gold
            .as_deref()
            .and_then(|g| resolve_choice(g, &q.choices))
            .ok_or(format!("question {} has no gold choice among its choices", i + 1))?;
        out.push(CheckedQuestion { q, target_id, gold });
    }
    if let Some(t) = targets.iter().find(|t| !out.iter().any(|c| c.target_id == t.target_id)) {
        return Err(format!("no question about target {}", t.target_id));
    }
    Ok(out)
}

/// Checks each grounded target's attributes against the query.
pub fn consistency_reflect(
    ctx: &StageContext<'_>,
    keyframe: &RgbImage,
    targets: &[GroundedTarget],
    attributes: &[AttributeSpec],
    round: u32,
) -> Result<ReflectionChain> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("consistency reflection needs at least one target".into()));
    }
    let image = WireImage::encode(&annotate_targets(keyframe, targets))?;
    let attr_list = attributes
        .iter()
        .map(|a| {
            let level = match a.level {
                AttributeLevel::High => "high",
                AttributeLevel::Low => "low",
            };
            format!("- {} ({level})", a.attribute)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let target_list = targets
        .iter()
        .map(|t| format!("#{}: \"{}\"", t.target_id, t.expression.expression))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = ctx.prompts.render(
        PromptKind::ConsistencyQuestioner,
        &[("query", ctx.query), ("attributes", &attr_list), ("targets", &target_list)],
    )?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::ConsistencyQuestioner),
        ResponseTag::Questions,
        prompt.system,
        prompt.user,
        vec![image.clone()],
    );
    let questions = ctx
        .client
        .chat_with(&req, |reply| match reply {
            Reply::Questions(q) => check_consistency_questions(q, targets),
            other => Err(format!("unexpected reply {other:?}")),
        })?
        .value;

    let listing = numbered(questions.iter().map(|c| {
        let choices = c
            .q
            .choices
            .iter()
            .enumerate()
            .map(|(i, ch)| format!("{}) {ch}", choice_letter(i)))
            .collect::<Vec<_>>()
            .join(" ");
        format!("[target #{}] {} {choices}", c.target_id, c.q.question)
    }));
    let prompt = ctx.prompts.render(PromptKind::ConsistencyResponder, &[("questions", &listing)])?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::ConsistencyResponder),
        ResponseTag::QaAnswers,
        prompt.system,
        prompt.user,
        vec![image],
    );
    let n = questions.len();
    let answers = ctx
        .client
        .chat_with(&req, |reply| match reply {
            Reply::QaAnswers(a) if a.len() == n => Ok(a),
            Reply::QaAnswers(a) => Err(format!("{} answers for {n} questions", a.len())),
            other => Err(format!("unexpected reply {other:?}")),
        })?
        .value;

    let entries = questions
        .into_iter()
        .zip(answers)
        .map(|(c, a)| {
            let picked = resolve_choice(&a.answer, &c.q.choices);
            let correct = picked == Some(c.gold);
            let level = c
                .q
                .attribute
                .as_deref()
                .and_then(|name| attributes.iter().find(|s| s.attribute.eq_ignore_ascii_case(name)))
                .map(|s| s.level);
            let kind = match (c.q.kind, level) {
                (Some(k @ (QuestionKind::AttributeHigh | QuestionKind::AttributeLow)), _) => k,
                (_, Some(AttributeLevel::High)) => QuestionKind::AttributeHigh,
                _ => QuestionKind::AttributeLow,
            };
            let answer = picked.map(|i| c.q.choices[i].clone()).unwrap_or(a.answer);
            ReflectionQA {
                question: c.q.question,
                kind,
                gold: Some(c.q.choices[c.gold].clone()),
                choices: c.q.choices,
                answer,
                explanation: a.explanation,
                correct: Some(correct),
                passed: correct,
                target_id: Some(c.target_id),
                attribute: c.q.attribute,
                better_frame: None,
            }
        })
        .collect();
    Ok(assemble_consistency(entries, targets, ctx.config.reflection.consistency_threshold, round))
}

/// Verdict and report from judged consistency entries.
pub fn assemble_consistency(
    entries: Vec<ReflectionQA>,
    targets: &[GroundedTarget],
    threshold: f64,
    round: u32,
) -> ReflectionChain {
    let inconsistent: Vec<&GroundedTarget> = targets
        .iter()
        .filter(|t| {
            entries
                .iter()
                .any(|e| e.target_id == Some(t.target_id) && e.correct == Some(false))
        })
        .collect();
    let pass = consistency_passes(targets.len(), inconsistent.len(), threshold);
    let feedback = if pass {
        String::new()
    } else {
        let mut lines = vec![format!(
            "{} of {} predicted target(s) do not match the query.",
            inconsistent.len(),
            targets.len()
        )];
        for t in &inconsistent {
            for e in entries
                .iter()
                .filter(|e| e.target_id == Some(t.target_id) && e.correct == Some(false))
            {
                let attr = e.attribute.as_deref().unwrap_or("attribute");
                let mut line = format!(
                    "Target #{} (\"{}\"): {attr} is specified as {} in the query, but the predicted object is identified as {}.",
                    t.target_id,
                    t.expression.expression,
                    e.gold.as_deref().unwrap_or("?"),
                    e.answer
                );
                if !e.explanation.trim().is_empty() {
                    line.push(' ');
                    line.push_str(e.explanation.trim());
                }
                lines.push(line);
            }
        }
        lines.join("\n")
    };
    ReflectionChain {
        stage: Stage::Consistency,
        round,
        entries,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        feedback,
    }
}
