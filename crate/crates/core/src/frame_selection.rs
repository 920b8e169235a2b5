//! Coarse-to-fine frame selection.
//!
//! The coarse stage splits the clip into contiguous segments and keeps the
//! frame most similar to the query in each. The fine stage asks a language
//! model to rate those candidates; both scores are fused linearly and the
//! best `k` frames are kept, the top one becoming the keyframe.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::backend::{AgentRole, ChatRequest, Reply, RequestMeta, ResponseTag, SimilarityRequest, WireImage};
use crate::context::{feedback_section, StageContext};
use crate::error::{Error, Result};
use crate::prompts::PromptKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    /// Similarity as returned by the backend.
    pub raw_clip: f64,
    /// Similarity normalized over the candidate set.
    pub s_clip: f64,
    pub s_mllm: f64,
    pub s_fused: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSelection {
    pub candidates: Vec<FrameScore>,
    /// Ascending frame indices.
    pub selected: Vec<usize>,
    pub keyframe_index: usize,
    pub round: u32,
}

impl FrameSelection {
    /// 1-based position of the keyframe within `selected`.
    pub fn keyframe_position(&self) -> usize {
        self.selected
            .iter()
            .position(|&i| i == self.keyframe_index)
            .expect("keyframe is selected")
            + 1
    }

    pub fn score(&self, frame_index: usize) -> Option<&FrameScore> {
        self.candidates.iter().find(|c| c.frame_index == frame_index)
    }
}

/// Coarse candidates, computed once per session and reused across rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub frame_indices: Vec<usize>,
    pub raw_clip: Vec<f64>,
    pub s_clip: Vec<f64>,
}

impl CandidatePool {
    pub fn from_raw(picks: Vec<(usize, f64)>) -> Result<Self> {
        let (frame_indices, raw_clip): (Vec<_>, Vec<_>) = picks.into_iter().unzip();
        let s_clip = normalize_clip_scores(&raw_clip)?;
        Ok(Self {
            frame_indices,
            raw_clip,
            s_clip,
        })
    }

    pub fn len(&self) -> usize {
        self.frame_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_indices.is_empty()
    }

    /// Pairs each candidate with its language-model score.
    pub fn with_mllm(&self, s_mllm: &[f64]) -> Result<Vec<FrameScore>> {
        if s_mllm.len() != self.len() {
            return Err(Error::Arity {
                expected: self.len(),
                got: s_mllm.len(),
            });
        }
        Ok((0..self.len())
            .map(|i| FrameScore {
                frame_index: self.frame_indices[i],
                raw_clip: self.raw_clip[i],
                s_clip: self.s_clip[i],
                s_mllm: s_mllm[i],
                s_fused: f64::NAN,
            })
            .collect())
    }
}

/// `min(n, t)` contiguous segments covering `0..t`; the first `t mod n`
/// segments are one frame longer.
pub fn segment_bounds(t: usize, n: usize) -> Vec<Range<usize>> {
    let n = n.min(t);
    if n == 0 {
        return Vec::new();
    }
    let base = t / n;
    let extra = t % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for s in 0..n {
        let len = base + usize::from(s < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Per-segment argmax of `sims`, lowest index on ties.
pub fn coarse_pick(sims: &[f64], n: usize) -> Vec<usize> {
    segment_bounds(sims.len(), n)
        .into_iter()
        .map(|r| {
            let mut best = r.start;
            for i in r {
                if sims[i] > sims[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Raw similarity for every frame of the clip, in batches.
pub fn frame_similarities(ctx: &StageContext<'_>) -> Result<Vec<f64>> {
    let batch = ctx.config.selection.similarity_batch.max(1);
    let meta = RequestMeta::new(1, AgentRole::FrameSimilarity);
    let mut out = Vec::with_capacity(ctx.clip.len());
    let frames = ctx.clip.frames();
    for chunk in frames.chunks(batch) {
        let images = chunk.iter().map(WireImage::encode).collect::<Result<Vec<_>>>()?;
        let req = SimilarityRequest::new(meta.clone(), ctx.query, images);
        out.extend(ctx.client.similarity(&req)?);
    }
    Ok(out)
}

/// One `(frame_index, raw_similarity)` pick per segment, ascending.
pub fn coarse_select(ctx: &StageContext<'_>, n: usize) -> Result<Vec<(usize, f64)>> {
    if n == 0 {
        return Err(Error::InvalidInput("coarse selection needs n >= 1".into()));
    }
    let sims = frame_similarities(ctx)?;
    Ok(coarse_pick(&sims, n).into_iter().map(|i| (i, sims[i])).collect())
}

/// Min-max normalization; constant input maps to 0.5.
pub fn normalize_clip_scores(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::InvalidInput("cannot normalize an empty score list".into()));
    }
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite similarity score {bad}")));
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![0.5; raw.len()]);
    }
    Ok(raw.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

#[inline]
pub fn fuse(alpha: f64, beta: f64, s_clip: f64, s_mllm: f64) -> f64 {
    alpha * s_clip + beta * s_mllm
}

/// Converts 0–100 model ratings to `[0, 1]`, clamping out-of-range values.
pub fn scale_mllm_scores(raw: &[f64]) -> std::result::Result<Vec<f64>, String> {
    raw.iter()
        .map(|&v| {
            if !v.is_finite() {
                return Err(format!("non-finite frame score {v}"));
            }
            let s = v / 100.0;
            if !(0.0..=1.0).contains(&s) {
                log::warn!("frame score {v} outside 0-100, clamped");
            }
            Ok(s.clamp(0.0, 1.0))
        })
        .collect()
}

pub(crate) fn frame_list(frames: &[usize]) -> String {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| format!("Image {}: frame #{f}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn rescore_instruction() -> &'static str {
    "Re-rate the frames so that frames addressing this feedback score highest."
}

/// Language-model importance for each candidate, in `[0, 1]`.
pub fn fine_score(
    ctx: &StageContext<'_>,
    candidates: &[usize],
    feedback: Option<&str>,
    round: u32,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("fine scoring needs at least one candidate".into()));
    }
    let count = candidates.len().to_string();
    let list = frame_list(candidates);
    let fb = feedback_section(feedback, rescore_instruction());
    let prompt = ctx.prompts.render(
        PromptKind::FrameScores,
        &[("query", ctx.query), ("count", &count), ("frame_list", &list), ("feedback", &fb)],
    )?;
    let images = candidates
        .iter()
        .map(|&i| WireImage::encode(ctx.clip.frame(i)))
        .collect::<Result<Vec<_>>>()?;
    let req = ChatRequest::new(
        RequestMeta::new(round, AgentRole::FrameScorer),
        ResponseTag::FrameScores,
        prompt.system,
        prompt.user,
        images,
    );
    let n = candidates.len();
    let out = ctx.client.chat_with(&req, |reply| match reply {
        Reply::FrameScores(s) if s.len() == n => scale_mllm_scores(&s),
        Reply::FrameScores(s) => Err(format!("{} scores for {n} frames", s.len())),
        other => Err(format!("unexpected reply {other:?}")),
    })?;
    Ok(out.value)
}

/// Fuses both scores, keeps the best `k` (lower index on ties) in ascending
/// frame order and picks the keyframe among them.
pub fn fuse_and_pick(candidates: &[FrameScore], k: usize, alpha: f64, beta: f64, round: u32) -> Result<FrameSelection> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidates to pick from".into()));
    }
    let mut scored: Vec<FrameScore> = candidates
        .iter()
        .map(|c| FrameScore {
            s_fused: fuse(alpha, beta, c.s_clip, c.s_mllm),
            ..c.clone()
        })
        .collect();
    if let Some(bad) = scored.iter().find(|c| !c.s_fused.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite fused score for frame {}", bad.frame_index)));
    }
    scored.sort_by_key(|c| c.frame_index);
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .s_fused
            .total_cmp(&scored[a].s_fused)
            .then(scored[a].frame_index.cmp(&scored[b].frame_index))
    });
    let mut selected: Vec<usize> = order.iter().take(k).map(|&i| scored[i].frame_index).collect();
    selected.sort_unstable();
    selected.dedup();
    let fused_of = |f: usize| scored.iter().find(|c| c.frame_index == f).expect("selected candidate").s_fused;
    let mut keyframe_index = selected[0];
    for &f in &selected[1..] {
        if fused_of(f) > fused_of(keyframe_index) {
            keyframe_index = f;
        }
    }
    Ok(FrameSelection {
        candidates: scored,
        selected,
        keyframe_index,
        round,
    })
}

/// Coarse pool for the session's clip and query.
pub fn build_pool(ctx: &StageContext<'_>) -> Result<CandidatePool> {
    CandidatePool::from_raw(coarse_select(ctx, ctx.config.selection.n)?)
}

/// Fine scoring and fusion over an existing pool.
pub fn select_from_pool(
    ctx: &StageContext<'_>,
    pool: &CandidatePool,
    feedback: Option<&str>,
    round: u32,
) -> Result<FrameSelection> {
    let s_mllm = fine_score(ctx, &pool.frame_indices, feedback, round)?;
    pick_with_scores(ctx, pool, &s_mllm, round)
}

pub(crate) fn pick_with_scores(
    ctx: &StageContext<'_>,
    pool: &CandidatePool,
    s_mllm: &[f64],
    round: u32,
) -> Result<FrameSelection> {
    let sel = &ctx.config.selection;
    fuse_and_pick(&pool.with_mllm(s_mllm)?, sel.k, sel.alpha, sel.beta, round)
}

/// Full coarse-to-fine selection.
pub fn select_frames(ctx: &StageContext<'_>, feedback: Option<&str>, round: u32) -> Result<FrameSelection> {
    let pool = build_pool(ctx)?;
    select_from_pool(ctx, &pool, feedback, round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fs(frame_index: usize, s_clip: f64, s_mllm: f64) -> FrameScore {
        FrameScore {
            frame_index,
            raw_clip: s_clip,
            s_clip,
            s_mllm,
            s_fused: f64::NAN,
        }
    }

    #[test]
    fn segments_front_load_the_remainder() {
        assert_eq!(segment_bounds(10, 3), vec![0..4, 4..7, 7..10]);
        assert_eq!(segment_bounds(3, 10), vec![0..1, 1..2, 2..3]);
        assert_eq!(segment_bounds(10, 10).len(), 10);
    }

    #[test]
    fn scripted_two_segment_pick() {
        let sims = [0.1, 0.2, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.8, 0.1];
        assert_eq!(coarse_pick(&sims, 2), vec![2, 8]);
    }

    #[test]
    fn coarse_ties_go_low() {
        assert_eq!(coarse_pick(&[0.5, 0.5, 0.5, 0.5], 2), vec![0, 2]);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_clip_scores(&[-1.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_clip_scores(&[0.7, 0.7]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize_clip_scores(&[0.3]).unwrap(), vec![0.5]);
        assert!(normalize_clip_scores(&[0.3, f64::NAN]).is_err());
        assert!(normalize_clip_scores(&[]).is_err());
    }

    #[test]
    fn scale_and_clamp() {
        assert_eq!(scale_mllm_scores(&[90.0, 10.0, 50.0]).unwrap(), vec![0.9, 0.1, 0.5]);
        assert_eq!(scale_mllm_scores(&[105.0, -3.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn fused_value_example() {
        let s = fuse_and_pick(&[fs(0, 0.5, 0.8)], 1, 0.3, 0.7, 1).unwrap();
        assert!((s.candidates[0].s_fused - 0.71).abs() < 1e-12);
    }

    #[test]
    fn clip_only_weights_follow_clip_ranking() {
        let c = [fs(0, 0.2, 0.9), fs(1, 0.8, 0.1), fs(2, 0.5, 0.5)];
        let s = fuse_and_pick(&c, 2, 1.0, 0.0, 1).unwrap();
        assert_eq!(s.selected, vec![1, 2]);
        assert_eq!(s.keyframe_index, 1);
    }

    #[test]
    fn short_candidate_list_selects_everything() {
        let s = fuse_and_pick(&[fs(0, 0.5, 0.1), fs(1, 0.5, 0.9)], 5, 0.3, 0.7, 1).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert_eq!(s.keyframe_index, 1);
        assert_eq!(s.keyframe_position(), 2);
    }

    #[test]
    fn zero_k_rejected() {
        assert!(fuse_and_pick(&[fs(0, 0.5, 0.5)], 0, 0.3, 0.7, 1).is_err());
    }

    proptest! {
        #[test]
        fn keyframe_invariant_under_positive_rescaling(
            scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12),
            k in 1usize..8,
            scale in 0.01f64..100.0,
        ) {
            let c: Vec<_> = scores.iter().enumerate().map(|(i, &(a, b))| fs(i, a, b)).collect();
            let base = fuse_and_pick(&c, k, 0.3, 0.7, 1).unwrap();
            let scaled = fuse_and_pick(&c, k, 0.3 * scale, 0.7 * scale, 1).unwrap();
            prop_assert_eq!(base.keyframe_index, scaled.keyframe_index);
            prop_assert!(base.selected.contains(&base.keyframe_index));
            prop_assert_eq!(base.selected.len(), k.min(c.len()));
        }

        #[test]
        fn raising_mllm_score_never_lowers_rank(
            scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..12),
            pick in 0usize..12,
            bump in 0.0f64..1.0,
        ) {
            let pick = pick % scores.len();
            let rank = |c: &[FrameScore]| {
                let s = fuse_and_pick(c, c.len(), 0.3, 0.7, 1).unwrap();
                let mut order: Vec<_> = s.candidates.clone();
                order.sort_by(|a, b| b.s_fused.total_cmp(&a.s_fused).then(a.frame_index.cmp(&b.frame_index)));
                order.iter().position(|x| x.frame_index == pick).unwrap()
            };
            let c: Vec<_> = scores.iter().enumerate().map(|(i, &(a, b))| fs(i, a, b)).collect();
            let mut raised = c.clone();
            raised[pick].s_mllm += bump;
            prop_assert!(rank(&raised) <= rank(&c));
        }

        #[test]
        fn segments_partition_the_clip(t in 1usize..300, n in 1usize..20) {
            let b = segment_bounds(t, n);
            prop_assert_eq!(b.len(), n.min(t));
            prop_assert_eq!(b[0].start, 0);
            prop_assert_eq!(b.last().unwrap().end, t);
            for w in b.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                prop_assert!(w[0].len() >= w[1].len());
                prop_assert!(w[0].len() - w[1].len() <= 1);
            }
        }
    }
}
