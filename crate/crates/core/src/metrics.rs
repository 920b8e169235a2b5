//! Region similarity J, boundary accuracy F and their mean over masklets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video_io::{Mask, Masklet};

/// Above this many targets assignment is greedy instead of exhaustive.
pub const EXHAUSTIVE_ASSIGNMENT_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    pub gt_target_id: usize,
    pub pred_target_id: Option<usize>,
    pub j: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub per_target: Vec<TargetScore>,
}

/// `round(0.008 · diagonal)` pixels.
pub fn default_tolerance(width: u32, height: u32) -> u32 {
    (0.008 * (width as f64).hypot(height as f64)).round() as u32
}

fn check_pair(a: &Mask, b: &Mask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn check_masklets(pred: &Masklet, gt: &Masklet) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    pred.masks.iter().zip(&gt.masks).try_for_each(|(a, b)| check_pair(a, b))
}

/// IoU of two masks; 1 when both are empty.
pub fn frame_iou(pred: &Mask, gt: &Mask) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        inter += usize::from(p && g);
        union += usize::from(p || g);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean per-frame IoU.
pub fn region_j(pred: &Masklet, gt: &Masklet) -> Result<f64> {
    check_masklets(pred, gt)?;
    if gt.is_empty() {
        return Ok(1.0);
    }
    let sum: f64 = pred.masks.iter().zip(&gt.masks).map(|(p, g)| frame_iou(p, g)).sum();
    Ok(sum / gt.len() as f64)
}

/// Mask pixels with at least one 4-neighbour outside the mask; pixels
/// beyond the image count as outside.
pub fn boundary(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let inside = |dx: i64, dy: i64| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 && mask.get(nx as u32, ny as u32)
        };
        !(inside(-1, 0) && inside(1, 0) && inside(0, -1) && inside(0, 1))
    })
}

fn disk_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn dilate(mask: &Mask, offsets: &[(i64, i64)]) -> Mask {
    let (w, h) = mask.dims();
    let mut out = Mask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for &(dx, dy) in offsets {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                    out.set(nx as u32, ny as u32, true);
                }
            }
        }
    }
    out
}

fn matched_fraction(from: &Mask, to_dilated: &Mask) -> f64 {
    let total = from.count();
    let hit = from
        .data()
        .iter()
        .zip(to_dilated.data())
        .filter(|(&a, &b)| a && b)
        .count();
    hit as f64 / total as f64
}

/// Boundary F-measure of one frame with a Euclidean match tolerance.
pub fn frame_f(pred: &Mask, gt: &Mask, tolerance: u32) -> f64 {
    let (bp, bg) = (boundary(pred), boundary(gt));
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let offsets = disk_offsets(tolerance);
    let precision = matched_fraction(&bp, &dilate(&bg, &offsets));
    let recall = matched_fraction(&bg, &dilate(&bp, &offsets));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean per-frame boundary F.
pub fn boundary_f(pred: &Masklet, gt: &Masklet, tolerance: u32) -> Result<f64> {
    check_masklets(pred, gt)?;
    if gt.is_empty() {
        return Ok(1.0);
    }
    let sum: f64 = pred
        .masks
        .iter()
        .zip(&gt.masks)
        .map(|(p, g)| frame_f(p, g, tolerance))
        .sum();
    Ok(sum / gt.len() as f64)
}

/// One-to-one assignment of rows (ground truth) to columns (predictions)
/// maximizing the summed score.
pub fn assign(scores: &[Vec<f64>], n_pred: usize) -> Vec<Option<usize>> {
    let n_gt = scores.len();
    if n_gt <= EXHAUSTIVE_ASSIGNMENT_LIMIT && n_pred <= EXHAUSTIVE_ASSIGNMENT_LIMIT {
        let mut best = (f64::NEG_INFINITY, vec![None; n_gt]);
        let mut current = vec![None; n_gt];
        search(scores, n_pred, 0, 0, 0.0, &mut current, &mut best);
        best.1
    } else {
        let mut pairs: Vec<(usize, usize)> = (0..n_gt).flat_map(|i| (0..n_pred).map(move |j| (i, j))).collect();
        pairs.sort_by(|a, b| scores[b.0][b.1].total_cmp(&scores[a.0][a.1]).then(a.cmp(b)));
        let mut out = vec![None; n_gt];
        let mut used = vec![false; n_pred];
        for (i, j) in pairs {
            if out[i].is_none() && !used[j] {
                out[i] = Some(j);
                used[j] = true;
            }
        }
        out
    }
}

fn search(
    scores: &[Vec<f64>],
    n_pred: usize,
    row: usize,
    used: u32,
    acc: f64,
    current: &mut Vec<Option<usize>>,
    best: &mut (f64, Vec<Option<usize>>),
) {
    if row == scores.len() {
        if acc > best.0 {
            *best = (acc, current.clone());
        }
        return;
    }
    for j in 0..n_pred {
        if used & (1 << j) == 0 {
            current[row] = Some(j);
            search(scores, n_pred, row + 1, used | (1 << j), acc + scores[row][j], current, best);
        }
    }
    current[row] = None;
    search(scores, n_pred, row + 1, used, acc, current, best);
}

/// Scores predictions against ground truth with an optimal matching on J.
/// Unmatched ground-truth targets score zero; means are over ground truth.
pub fn evaluate(preds: &[Masklet], gts: &[Masklet], tolerance: Option<u32>) -> Result<EvalResult> {
    if gts.is_empty() {
        return Err(Error::InvalidInput("evaluation needs at least one ground-truth masklet".into()));
    }
    for p in preds {
        check_masklets(p, &gts[0])?;
    }
    for g in &gts[1..] {
        check_masklets(g, &gts[0])?;
    }
    let tol = tolerance.unwrap_or_else(|| {
        gts[0]
            .masks
            .first()
            .map(|m| default_tolerance(m.width(), m.height()))
            .unwrap_or(0)
    });
    let j_matrix: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| preds.iter().map(|p| region_j(p, g)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let matching = assign(&j_matrix, preds.len());
    let mut per_target = Vec::with_capacity(gts.len());
    for (i, g) in gts.iter().enumerate() {
        let score = match matching[i] {
            Some(p) => TargetScore {
                gt_target_id: g.target_id,
                pred_target_id: Some(preds[p].target_id),
                j: j_matrix[i][p],
                f: boundary_f(&preds[p], g, tol)?,
            },
            None => TargetScore {
                gt_target_id: g.target_id,
                pred_target_id: None,
                j: 0.0,
                f: 0.0,
            },
        };
        per_target.push(score);
    }
    let n = gts.len() as f64;
    let j = per_target.iter().map(|t| t.j).sum::<f64>() / n;
    let f = per_target.iter().map(|t| t.f).sum::<f64>() / n;
    Ok(EvalResult {
        j,
        f,
        jf: (j + f) / 2.0,
        per_target,
    })
}
