//! Composes the selected frames into one canvas.
//!
//! In the default dynamic-focus mode the canvas is two cells tall. Context
//! frames are stacked two per column, left of the keyframe if earlier and
//! right of it if later, and the keyframe takes a double-width,
//! double-height column at its temporal position. Reading the slots
//! column-major, left to right and top to bottom, visits frames in temporal
//! order. When the keyframe sits at an even position among the selected
//! frames, one extra frame is sampled on each side of it so both sides hold
//! an even number of context frames.

use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::config::{LayoutMode, MIN_CELL_SIDE};
use crate::draw;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::video_io::VideoClip;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub mode: LayoutMode,
    /// Context frames before the keyframe, ascending.
    pub before: Vec<usize>,
    pub keyframe: usize,
    /// Context frames after the keyframe, ascending.
    pub after: Vec<usize>,
    /// Frames sampled in addition to the selection.
    pub extras: Vec<usize>,
}

impl LayoutPlan {
    pub fn frame_count(&self) -> usize {
        self.before.len() + 1 + self.after.len()
    }

    /// All frames in temporal order.
    pub fn frames(&self) -> Vec<usize> {
        let mut v = self.before.clone();
        v.push(self.keyframe);
        v.extend(&self.after);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub rect: Rect,
    pub frame_index: usize,
    pub is_keyframe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusCanvas {
    #[serde(skip, default = "empty_image")]
    pub image: RgbImage,
    pub width: u32,
    pub height: u32,
    pub slots: Vec<Slot>,
    /// Context cell size `(w, h)`.
    pub cell: (u32, u32),
    pub plan: LayoutPlan,
}

fn empty_image() -> RgbImage {
    RgbImage::new(0, 0)
}

impl FocusCanvas {
    pub fn keyframe_slot(&self) -> &Slot {
        self.slots.iter().find(|s| s.is_keyframe).expect("canvas has a keyframe slot")
    }

    /// Slots in reading order, as `"#i"` labels, for prompts.
    pub fn legend(&self) -> String {
        self.slots
            .iter()
            .map(|s| {
                if s.is_keyframe {
                    format!("#{} (keyframe)", s.frame_index)
                } else {
                    format!("#{}", s.frame_index)
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn context_frames(&self) -> Vec<usize> {
        self.slots.iter().filter(|s| !s.is_keyframe).map(|s| s.frame_index).collect()
    }
}

/// Nearest index in `lo..=hi` to `target` not in `used`; lower on ties.
fn nearest_unused(target: usize, lo: usize, hi: usize, used: &[usize]) -> Option<usize> {
    if lo > hi {
        return None;
    }
    let target = target.clamp(lo, hi);
    let span = (target - lo).max(hi - target);
    for d in 0..=span {
        for cand in [target.checked_sub(d), target.checked_add(d)].into_iter().flatten() {
            if (lo..=hi).contains(&cand) && !used.contains(&cand) {
                return Some(cand);
            }
        }
    }
    None
}

/// Dynamic-focus plan. `selected` must be ascending and contain `keyframe`.
pub fn plan_layout(selected: &[usize], keyframe: usize, t: usize) -> Result<LayoutPlan> {
    plan_for_mode(LayoutMode::DynamicFocus, selected, keyframe, t)
}

pub fn plan_for_mode(mode: LayoutMode, selected: &[usize], keyframe: usize, t: usize) -> Result<LayoutPlan> {
    let pos = selected
        .iter()
        .position(|&i| i == keyframe)
        .ok_or_else(|| Error::InvalidInput(format!("keyframe {keyframe} is not among the selected frames")))?;
    if selected.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("selected frames must be strictly ascending".into()));
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= t) {
        return Err(Error::InvalidInput(format!("frame {bad} out of range for {t} frames")));
    }
    let mut plan = LayoutPlan {
        mode,
        before: selected[..pos].to_vec(),
        keyframe,
        after: selected[pos + 1..].to_vec(),
        extras: Vec::new(),
    };
    match mode {
        LayoutMode::SingleKeyframe => {
            plan.before.clear();
            plan.after.clear();
        }
        LayoutMode::UniformGrid => {}
        LayoutMode::DynamicFocus => {
            let p = pos + 1;
            if p % 2 == 0 {
                let prev = selected[pos - 1];
                if keyframe > 0 {
                    if let Some(e) = nearest_unused((prev + keyframe) / 2, 0, keyframe - 1, selected) {
                        plan.extras.push(e);
                    }
                }
                let next = selected.get(pos + 1).copied().unwrap_or(t - 1);
                if keyframe + 1 < t {
                    let mut used = selected.to_vec();
                    used.extend(&plan.extras);
                    if let Some(e) = nearest_unused((keyframe + next).div_ceil(2), keyframe + 1, t - 1, &used) {
                        plan.extras.push(e);
                    }
                }
                for &e in &plan.extras {
                    if e < keyframe {
                        plan.before.push(e);
                    } else {
                        plan.after.push(e);
                    }
                }
                plan.before.sort_unstable();
                plan.after.sort_unstable();
            }
        }
    }
    Ok(plan)
}

/// Slot rectangles and canvas size for `plan` with context cells `w`×`h`.
pub fn slot_geometry(plan: &LayoutPlan, w: u32, h: u32) -> (u32, u32, Vec<Slot>) {
    let mut slots = Vec::with_capacity(plan.frame_count());
    match plan.mode {
        LayoutMode::UniformGrid => {
            for (i, f) in plan.frames().into_iter().enumerate() {
                let (col, row) = ((i / 2) as u32, (i % 2) as u32);
                slots.push(Slot {
                    rect: Rect::from_origin(col * w, row * h, w, h),
                    frame_index: f,
                    is_keyframe: f == plan.keyframe,
                });
            }
            let cols = plan.frame_count().div_ceil(2) as u32;
            (cols * w, 2 * h, slots)
        }
        LayoutMode::DynamicFocus | LayoutMode::SingleKeyframe => {
            let mut x = 0;
            let stack = |frames: &[usize], x: &mut u32, slots: &mut Vec<Slot>| {
                for pair in frames.chunks(2) {
                    for (row, &f) in pair.iter().enumerate() {
                        slots.push(Slot {
                            rect: Rect::from_origin(*x, row as u32 * h, w, h),
                            frame_index: f,
                            is_keyframe: false,
                        });
                    }
                    *x += w;
                }
            };
            stack(&plan.before, &mut x, &mut slots);
            slots.push(Slot {
                rect: Rect::from_origin(x, 0, 2 * w, 2 * h),
                frame_index: plan.keyframe,
                is_keyframe: true,
            });
            x += 2 * w;
            stack(&plan.after, &mut x, &mut slots);
            (x, 2 * h, slots)
        }
    }
}

/// Scales `img` to fit `w`×`h` preserving aspect ratio, centered on black.
pub fn letterbox(img: &RgbImage, w: u32, h: u32) -> RgbImage {
    let (iw, ih) = img.dimensions();
    if (iw, ih) == (w, h) {
        return img.clone();
    }
    let scale = (w as f64 / iw as f64).min(h as f64 / ih as f64);
    let nw = ((iw as f64 * scale).round() as u32).clamp(1, w);
    let nh = ((ih as f64 * scale).round() as u32).clamp(1, h);
    let resized = imageops::resize(img, nw, nh, FilterType::Triangle);
    let mut out = RgbImage::from_pixel(w, h, Rgb([0, 0, 0]));
    imageops::replace(&mut out, &resized, ((w - nw) / 2) as i64, ((h - nh) / 2) as i64);
    out
}

fn label_scale(slot_h: u32) -> u32 {
    (slot_h / 100).max(1)
}

/// Renders `plan` from `clip` with context cells `cell_w`×`cell_h`.
pub fn compose(clip: &VideoClip, plan: &LayoutPlan, cell_w: u32, cell_h: u32, label_frames: bool) -> Result<FocusCanvas> {
    if cell_w < MIN_CELL_SIDE || cell_h < MIN_CELL_SIDE {
        return Err(Error::InvalidInput(format!(
            "cell {cell_w}x{cell_h} is below the {MIN_CELL_SIDE}px minimum"
        )));
    }
    if let Some(bad) = plan.frames().into_iter().find(|&f| f >= clip.len()) {
        return Err(Error::InvalidInput(format!("frame {bad} out of range for {} frames", clip.len())));
    }
    let (cw, ch, slots) = slot_geometry(plan, cell_w, cell_h);
    let mut image = RgbImage::from_pixel(cw, ch, Rgb([0, 0, 0]));
    for s in &slots {
        let tile = letterbox(clip.frame(s.frame_index), s.rect.width(), s.rect.height());
        imageops::replace(&mut image, &tile, s.rect.x0 as i64, s.rect.y0 as i64);
        if label_frames {
            draw::draw_label(
                &mut image,
                s.rect.x0 + 2,
                s.rect.y0 + 2,
                &format!("#{}", s.frame_index),
                label_scale(s.rect.height()),
            );
        }
    }
    Ok(FocusCanvas {
        image,
        width: cw,
        height: ch,
        slots,
        cell: (cell_w, cell_h),
        plan: plan.clone(),
    })
}
