//! Coarse segment picks, score normalization and fused top-k selection on
//! hand-written scores.

use refer_engine::frame_selection::{
    coarse_pick, fuse_and_pick, normalize_clip_scores, scale_mllm_scores, segment_bounds, FrameScore,
};

fn main() -> anyhow::Result<()> {
    let sims = [0.21, 0.35, 0.30, 0.62, 0.58, 0.11, 0.44, 0.47, 0.90, 0.12, 0.33];
    let n = 4;
    println!("segments: {:?}", segment_bounds(sims.len(), n));
    let pool = coarse_pick(&sims, n);
    println!("coarse picks: {pool:?}");

    let raw: Vec<f64> = pool.iter().map(|&i| sims[i]).collect();
    let s_clip = normalize_clip_scores(&raw)?;
    let s_mllm = scale_mllm_scores(&[40.0, 95.0, 70.0, 20.0]).map_err(anyhow::Error::msg)?;
    let candidates: Vec<FrameScore> = pool
        .iter()
        .zip(raw.iter().zip(s_clip.iter().zip(&s_mllm)))
        .map(|(&frame_index, (&raw_clip, (&s_clip, &s_mllm)))| FrameScore {
            frame_index,
            raw_clip,
            s_clip,
            s_mllm,
            s_fused: 0.0,
        })
        .collect();

    for (alpha, beta) in [(0.5, 0.5), (1.0, 0.0), (0.0, 1.0)] {
        let sel = fuse_and_pick(&candidates, 2, alpha, beta, 1)?;
        let fused: Vec<String> = sel.candidates.iter().map(|c| format!("{}:{:.3}", c.frame_index, c.s_fused)).collect();
        println!(
            "alpha={alpha} beta={beta} fused=[{}] selected={:?} keyframe={}",
            fused.join(" "),
            sel.selected,
            sel.keyframe_index
        );
    }
    Ok(())
}
