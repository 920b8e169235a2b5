//! Frame stores, binary masklets and their on-disk formats.
//!
//! Clips are loaded from directories of lexicographically ordered frames
//! (the layout benchmarks ship) or, when `ffmpeg` is on `PATH`, from video
//! files. Masklets are written either as one 8-bit PNG per (target, frame)
//! or as a single run-length JSON document (`masklet/1`).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use image::{GrayImage, Luma, Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::draw;
use crate::error::{Error, Result};
use crate::geometry::NormBox;

pub const MASKLET_SCHEMA: &str = "masklet/1";
pub const MANIFEST_FILE: &str = "manifest.txt";

const FRAME_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

/// Decoded, immutable frame sequence. All frames share one size.
#[derive(Debug, Clone)]
pub struct VideoClip {
    frames: Vec<RgbImage>,
    source_indices: Vec<usize>,
    source_id: String,
}

impl VideoClip {
    pub fn new(frames: Vec<RgbImage>, source_id: impl Into<String>) -> Result<Self> {
        let indices = (0..frames.len()).collect();
        Self::with_source_indices(frames, indices, source_id)
    }

    /// Builds a clip whose frame `i` came from original frame `source_indices[i]`.
    pub fn with_source_indices(
        frames: Vec<RgbImage>,
        source_indices: Vec<usize>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let source_id = source_id.into();
        let first = frames
            .first()
            .ok_or_else(|| Error::ZeroFrames(PathBuf::from(&source_id)))?;
        let dims = first.dimensions();
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::InvalidInput("frames must be non-empty".into()));
        }
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dimensions() != dims) {
            return Err(Error::DimensionMismatch(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width(),
                f.height(),
                dims.0,
                dims.1
            )));
        }
        if source_indices.len() != frames.len() {
            return Err(Error::InvalidInput("one source index per frame required".into()));
        }
        Ok(Self {
            frames,
            source_indices,
            source_id,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height()
    }

    pub fn frame(&self, index: usize) -> &RgbImage {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[RgbImage] {
        &self.frames
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

/// Binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "mask data has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|v| *v)
    }

    /// Tight bounding box of the true pixels, normalized; `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<NormBox> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        bounds.map(|(x0, y0, x1, y1)| {
            NormBox::new(
                x0 as f64 / self.width as f64,
                y0 as f64 / self.height as f64,
                (x1 + 1) as f64 / self.width as f64,
                (y1 + 1) as f64 / self.height as f64,
            )
        })
    }

    /// Per-row run lengths of alternating 0/1 runs, each row starting with a 0-run.
    pub fn to_rle(&self) -> Vec<Vec<u32>> {
        (0..self.height)
            .map(|y| {
                let mut runs = Vec::new();
                let mut current = false;
                let mut len = 0u32;
                for x in 0..self.width {
                    let v = self.get(x, y);
                    if v == current {
                        len += 1;
                    } else {
                        runs.push(len);
                        current = v;
                        len = 1;
                    }
                }
                runs.push(len);
                runs
            })
            .collect()
    }

    pub fn from_rle(width: u32, height: u32, rows: &[Vec<u32>]) -> Result<Self> {
        if rows.len() != height as usize {
            return Err(Error::DimensionMismatch(format!(
                "rle has {} rows, expected {height}",
                rows.len()
            )));
        }
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for (y, runs) in rows.iter().enumerate() {
            let mut value = false;
            let mut n = 0u64;
            for &run in runs {
                data.extend(std::iter::repeat_n(value, run as usize));
                n += run as u64;
                value = !value;
            }
            if n != width as u64 {
                return Err(Error::DimensionMismatch(format!(
                    "rle row {y} covers {n} pixels, expected {width}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// Per-target mask sequence, one mask per clip frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masklet {
    pub target_id: usize,
    pub masks: Vec<Mask>,
}

impl Masklet {
    pub fn empty(target_id: usize, frames: usize, width: u32, height: u32) -> Self {
        Self {
            target_id,
            masks: vec![Mask::empty(width, height); frames],
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Checks frame count and per-frame dimensions.
    pub fn check_shape(&self, frames: usize, width: u32, height: u32) -> Result<()> {
        if self.masks.len() != frames {
            return Err(Error::DimensionMismatch(format!(
                "masklet {} has {} masks, expected {frames}",
                self.target_id,
                self.masks.len()
            )));
        }
        if let Some((i, m)) = self
            .masks
            .iter()
            .enumerate()
            .find(|(_, m)| m.dims() != (width, height))
        {
            return Err(Error::DimensionMismatch(format!(
                "masklet {} frame {i} is {}x{}, expected {width}x{height}",
                self.target_id,
                m.width(),
                m.height()
            )));
        }
        Ok(())
    }

    pub fn check_for(&self, clip: &VideoClip) -> Result<()> {
        self.check_shape(clip.len(), clip.width(), clip.height())
    }
}

/// Original frame indices kept when subsampling `total` frames down to at most `max`.
pub fn subsample_indices(total: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m > 0 && total > m => {
            let stride = total / m;
            (0..m).map(|i| i * stride).collect()
        }
        _ => (0..total).collect(),
    }
}

/// Loads a clip from a frame directory or (via `ffmpeg`) a video file.
pub fn load_clip(path: &Path, max_frames: Option<usize>) -> Result<VideoClip> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_dir() {
        return load_frame_dir(path, max_frames);
    }
    let tmp = tempfile::tempdir().map_err(|e| Error::io(path, e))?;
    let status = Command::new("ffmpeg")
        .arg("-v")
        .arg("error")
        .arg("-i")
        .arg(path)
        .arg(tmp.path().join("%06d.png"))
        .status()
        .map_err(|e| Error::io(path, e))?;
    if !status.success() {
        return Err(Error::InvalidInput(format!(
            "ffmpeg could not decode {}",
            path.display()
        )));
    }
    let mut clip = load_frame_dir(tmp.path(), max_frames)?;
    clip.source_id = path.display().to_string();
    Ok(clip)
}

fn sorted_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_frame_dir(dir: &Path, max_frames: Option<usize>) -> Result<VideoClip> {
    let files = sorted_files(dir, FRAME_EXTENSIONS)?;
    if files.is_empty() {
        return Err(Error::ZeroFrames(dir.to_path_buf()));
    }
    let keep = subsample_indices(files.len(), max_frames);
    let mut frames = Vec::with_capacity(keep.len());
    for &i in &keep {
        let img = image::open(&files[i])?.to_rgb8();
        if let Some(first) = frames.first() {
            let first: &RgbImage = first;
            if first.dimensions() != img.dimensions() {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    files[i].display(),
                    img.width(),
                    img.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        frames.push(img);
    }
    VideoClip::with_source_indices(frames, keep, dir.display().to_string())
}

/// Lossless PNG encoding used on the wire and for image fingerprints.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Hex SHA-256 of encoded image bytes.
pub fn image_hash(png: &[u8]) -> String {
    hex::encode(Sha256::digest(png))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskFormat {
    PngPerFrame,
    RleJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RleTarget {
    pub target_id: usize,
    /// One entry per frame; each frame is a list of per-row run lengths.
    pub frames: Vec<Vec<Vec<u32>>>,
}

/// `masklet/1` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskletDocument {
    pub schema: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: usize,
    pub targets: Vec<RleTarget>,
}

impl MaskletDocument {
    pub fn from_masklets(width: u32, height: u32, frame_count: usize, targets: &[Masklet]) -> Self {
        Self {
            schema: MASKLET_SCHEMA.to_string(),
            width,
            height,
            frame_count,
            targets: targets
                .iter()
                .map(|m| RleTarget {
                    target_id: m.target_id,
                    frames: m.masks.iter().map(Mask::to_rle).collect(),
                })
                .collect(),
        }
    }

    pub fn to_masklets(&self) -> Result<Vec<Masklet>> {
        if self.schema != MASKLET_SCHEMA {
            return Err(Error::InvalidInput(format!(
                "unsupported mask schema `{}`",
                self.schema
            )));
        }
        self.targets
            .iter()
            .map(|t| {
                if t.frames.len() != self.frame_count {
                    return Err(Error::DimensionMismatch(format!(
                        "target {} has {} frames, expected {}",
                        t.target_id,
                        t.frames.len(),
                        self.frame_count
                    )));
                }
                let masks = t
                    .frames
                    .iter()
                    .map(|rows| Mask::from_rle(self.width, self.height, rows))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Masklet {
                    target_id: t.target_id,
                    masks,
                })
            })
            .collect()
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn mask_to_gray(mask: &Mask) -> GrayImage {
    GrayImage::from_fn(mask.width(), mask.height(), |x, y| {
        Luma([if mask.get(x, y) { 255 } else { 0 }])
    })
}

/// Writes `targets` under `out_dir` and returns the path of the manifest,
/// which lists every written file relative to `out_dir`, one per line.
pub fn write_masklets(
    clip: &VideoClip,
    targets: &[Masklet],
    out_dir: &Path,
    format: MaskFormat,
) -> Result<PathBuf> {
    for t in targets {
        t.check_for(clip)?;
    }
    create_dir(out_dir)?;
    let mut written = Vec::new();
    match format {
        MaskFormat::PngPerFrame => {
            for t in targets {
                let rel_dir = format!("target_{}", t.target_id);
                create_dir(&out_dir.join(&rel_dir))?;
                for (i, mask) in t.masks.iter().enumerate() {
                    let rel = format!("{rel_dir}/{i:05}.png");
                    mask_to_gray(mask).save(out_dir.join(&rel))?;
                    written.push(rel);
                }
            }
        }
        MaskFormat::RleJson => {
            let doc = MaskletDocument::from_masklets(clip.width(), clip.height(), clip.len(), targets);
            let rel = "masklets.json".to_string();
            let path = out_dir.join(&rel);
            fs::write(&path, serde_json::to_vec(&doc)?).map_err(|e| Error::io(&path, e))?;
            written.push(rel);
        }
    }
    let manifest = out_dir.join(MANIFEST_FILE);
    let mut f = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    for rel in &written {
        writeln!(f, "{rel}").map_err(|e| Error::io(&manifest, e))?;
    }
    Ok(manifest)
}

pub fn read_rle_json(path: &Path) -> Result<Vec<Masklet>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let doc: MaskletDocument = serde_json::from_slice(&bytes)?;
    doc.to_masklets()
}

/// Blends every target's mask into `frame` and draws optional box outlines.
pub fn overlay_frame(
    frame: &RgbImage,
    frame_index: usize,
    targets: &[Masklet],
    boxes: Option<&[Option<NormBox>]>,
    alpha: f32,
) -> RgbImage {
    let mut out = frame.clone();
    for t in targets {
        let color = draw::target_color(t.target_id);
        let mask = &t.masks[frame_index];
        for (x, y, px) in out.enumerate_pixels_mut() {
            if mask.get(x, y) {
                *px = draw::blend(*px, color, alpha);
            }
        }
    }
    if let Some(boxes) = boxes {
        let (w, h) = frame.dimensions();
        for (t, b) in targets.iter().zip(boxes) {
            if let Some(b) = b {
                draw::draw_outline(&mut out, &b.to_pixels(w, h), draw::target_color(t.target_id), 2);
            }
        }
    }
    out
}

/// Writes one composite PNG per frame to `out_dir` as `<frame:05>.png`.
/// `boxes`, when given, holds one optional box per target.
pub fn render_overlay(
    clip: &VideoClip,
    targets: &[Masklet],
    boxes: Option<&[Option<NormBox>]>,
    out_dir: &Path,
    alpha: f32,
) -> Result<Vec<PathBuf>> {
    for t in targets {
        t.check_for(clip)?;
    }
    if let Some(b) = boxes {
        if b.len() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} boxes for {} targets",
                b.len(),
                targets.len()
            )));
        }
    }
    create_dir(out_dir)?;
    let mut paths = Vec::with_capacity(clip.len());
    for (i, frame) in clip.frames().iter().enumerate() {
        let path = out_dir.join(format!("{i:05}.png"));
        overlay_frame(frame, i, targets, boxes, alpha).save(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Raw per-pixel label keys of a PNG: palette index or gray level for
/// indexed/gray images, packed color for RGB(A). No palette expansion.
fn read_label_png(path: &Path) -> Result<(u32, u32, Vec<u32>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let bad = |e: png::DecodingError| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut reader = decoder.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::InvalidInput(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (w, h) = (info.width, info.height);
    let depth = info.bit_depth as u32;
    let channels = info.color_type.samples() as u32;
    let line = info.line_size;
    let mut labels = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h as usize {
        let row = &buf[y * line..(y + 1) * line];
        for x in 0..w as usize {
            let sample = |c: usize| -> u32 {
                let idx = x * channels as usize + c;
                match depth {
                    8 => row[idx] as u32,
                    16 => u16::from_be_bytes([row[idx * 2], row[idx * 2 + 1]]) as u32,
                    d => {
                        let bit = idx * d as usize;
                        let byte = row[bit / 8];
                        let shift = 8 - d as usize - (bit % 8);
                        ((byte >> shift) & ((1u8 << d) - 1)) as u32
                    }
                }
            };
            let key = match channels {
                1 | 2 => sample(0),
                _ => (sample(0) << 16) | (sample(1) << 8) | sample(2),
            };
            labels.push(key);
        }
    }
    Ok((w, h, labels))
}

/// Loads DAVIS-style ground truth. Either `dir` holds one subdirectory per
/// target (binary PNG per frame, any non-zero pixel is foreground) or one
/// label PNG per frame whose distinct non-zero values are the targets,
/// numbered in ascending label order.
///
/// `frame_indices` selects which ground-truth frames to keep (matching a
/// subsampled clip); `None` keeps all of them.
pub fn load_gt_masklets(dir: &Path, frame_indices: Option<&[usize]>) -> Result<Vec<Masklet>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let pick = |n: usize| -> Result<Vec<usize>> {
        match frame_indices {
            None => Ok((0..n).collect()),
            Some(ix) => {
                if let Some(bad) = ix.iter().find(|&&i| i >= n) {
                    return Err(Error::DimensionMismatch(format!(
                        "ground truth has {n} frames, index {bad} requested"
                    )));
                }
                Ok(ix.to_vec())
            }
        }
    };

    if !subdirs.is_empty() {
        let mut out = Vec::new();
        for (target_id, sub) in subdirs.iter().enumerate() {
            let files = sorted_files(sub, &["png"])?;
            if files.is_empty() {
                return Err(Error::ZeroFrames(sub.clone()));
            }
            let mut masks = Vec::new();
            for i in pick(files.len())? {
                let (w, h, labels) = read_label_png(&files[i])?;
                masks.push(Mask::from_vec(w, h, labels.iter().map(|v| *v != 0).collect())?);
            }
            out.push(Masklet { target_id, masks });
        }
        return Ok(out);
    }

    let files = sorted_files(dir, &["png"])?;
    if files.is_empty() {
        return Err(Error::ZeroFrames(dir.to_path_buf()));
    }
    let frames = pick(files.len())?
        .into_iter()
        .map(|i| read_label_png(&files[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut label_ids: BTreeMap<u32, usize> = BTreeMap::new();
    for (_, _, labels) in &frames {
        for &l in labels.iter().filter(|l| **l != 0) {
            label_ids.insert(l, 0);
        }
    }
    for (i, v) in label_ids.values_mut().enumerate() {
        *v = i;
    }
    let (w, h) = (frames[0].0, frames[0].1);
    let mut out: Vec<Masklet> = (0..label_ids.len())
        .map(|id| Masklet::empty(id, frames.len(), w, h))
        .collect();
    for (fi, (fw, fh, labels)) in frames.iter().enumerate() {
        if (*fw, *fh) != (w, h) {
            return Err(Error::DimensionMismatch(format!(
                "ground-truth frame {fi} is {fw}x{fh}, expected {w}x{h}"
            )));
        }
        for (p, l) in labels.iter().enumerate() {
            if let Some(&id) = label_ids.get(l) {
                out[id].masks[fi].data[p] = true;
            }
        }
    }
    Ok(out)
}

/// Solid-color frames, handy for tests and examples.
pub fn solid_clip(frames: usize, width: u32, height: u32, color: [u8; 3]) -> Result<VideoClip> {
    VideoClip::new(
        vec![RgbImage::from_pixel(width, height, Rgb(color)); frames],
        "solid",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_frames(dir: &Path, n: usize, w: u32, h: u32) {
        for i in 0..n {
            RgbImage::from_pixel(w, h, Rgb([i as u8, 0, 0]))
                .save(dir.join(format!("f{i:03}.png")))
                .unwrap();
        }
    }

    #[test]
    fn loads_directory_of_frames() {
        let tmp = tempfile::tempdir().unwrap();
        write_frames(tmp.path(), 5, 64, 64);
        let clip = load_clip(tmp.path(), None).unwrap();
        assert_eq!((clip.len(), clip.width(), clip.height()), (5, 64, 64));
        assert_eq!(clip.frame(3).get_pixel(0, 0)[0], 3);
    }

    #[test]
    fn subsamples_with_uniform_stride() {
        let tmp = tempfile::tempdir().unwrap();
        write_frames(tmp.path(), 10, 8, 8);
        let clip = load_clip(tmp.path(), Some(5)).unwrap();
        assert_eq!(clip.len(), 5);
        assert_eq!(clip.source_indices(), &[0, 2, 4, 6, 8]);
        assert_eq!(clip.frame(2).get_pixel(0, 0)[0], 4);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_clip(tmp.path(), None).unwrap_err();
        assert!(matches!(err, Error::ZeroFrames(_)));
        assert!(err.to_string().contains("zero decodable frames"));
    }

    #[test]
    fn inconsistent_dimensions_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write_frames(tmp.path(), 2, 8, 8);
        RgbImage::new(9, 8).save(tmp.path().join("f999.png")).unwrap();
        assert!(matches!(
            load_clip(tmp.path(), None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn missing_path_is_io_error() {
        assert!(matches!(
            load_clip(Path::new("/definitely/not/here"), None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn png_per_frame_layout() {
        let clip = solid_clip(3, 6, 4, [1, 2, 3]).unwrap();
        let m = Masklet::empty(0, 3, 6, 4);
        let tmp = tempfile::tempdir().unwrap();
        let manifest = write_masklets(&clip, &[m], tmp.path(), MaskFormat::PngPerFrame).unwrap();
        let listed = fs::read_to_string(&manifest).unwrap();
        let lines: Vec<&str> = listed.lines().collect();
        assert_eq!(lines, ["target_0/00000.png", "target_0/00001.png", "target_0/00002.png"]);
        let img = image::open(tmp.path().join(lines[1])).unwrap().to_luma8();
        assert!(img.pixels().all(|p| p[0] == 0));
    }

    #[test]
    fn write_rejects_wrong_shape() {
        let clip = solid_clip(3, 6, 4, [0, 0, 0]).unwrap();
        let m = Masklet::empty(0, 2, 6, 4);
        let tmp = tempfile::tempdir().unwrap();
        assert!(write_masklets(&clip, &[m], tmp.path(), MaskFormat::RleJson).is_err());
    }

    #[test]
    fn rle_starts_with_zero_run() {
        let m = Mask::from_fn(5, 1, |x, _| x < 2);
        assert_eq!(m.to_rle(), vec![vec![0, 2, 3]]);
        let m = Mask::from_fn(4, 1, |x, _| x == 3);
        assert_eq!(m.to_rle(), vec![vec![3, 1]]);
        assert_eq!(Mask::empty(4, 2).to_rle(), vec![vec![4], vec![4]]);
    }

    #[test]
    fn overlay_without_targets_copies_frames() {
        let clip = solid_clip(2, 4, 4, [10, 20, 30]).unwrap();
        let out = overlay_frame(clip.frame(0), 0, &[], None, 0.5);
        assert_eq!(&out, clip.frame(0));
    }

    #[test]
    fn overlay_full_mask_blends_every_pixel() {
        let clip = solid_clip(1, 4, 3, [100, 100, 100]).unwrap();
        let m = Masklet {
            target_id: 0,
            masks: vec![Mask::from_fn(4, 3, |_, _| true)],
        };
        let out = overlay_frame(clip.frame(0), 0, &[m], None, 0.5);
        let c = draw::target_color(0);
        let want = |b: u8, t: u8| ((b as f32 + t as f32) / 2.0).round() as u8;
        for p in out.pixels() {
            assert_eq!(*p, Rgb([want(100, c[0]), want(100, c[1]), want(100, c[2])]));
        }
    }

    #[test]
    fn overlay_writes_one_file_per_frame() {
        let clip = solid_clip(3, 8, 8, [0, 0, 0]).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let m = Masklet::empty(1, 3, 8, 8);
        let boxes = [Some(NormBox::new(0.0, 0.0, 0.5, 0.5))];
        let paths = render_overlay(&clip, &[m], Some(&boxes), tmp.path(), 0.5).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| p.exists()));
    }

    #[test]
    fn gt_from_label_pngs_and_subdirs() {
        let tmp = tempfile::tempdir().unwrap();
        for i in 0..2u32 {
            let img = GrayImage::from_fn(4, 4, |x, _| Luma([if x == i { 1 } else if x == 3 { 2 } else { 0 }]));
            img.save(tmp.path().join(format!("{i:05}.png"))).unwrap();
        }
        let gts = load_gt_masklets(tmp.path(), None).unwrap();
        assert_eq!(gts.len(), 2);
        assert_eq!(gts[0].masks[1].count(), 4);
        assert!(gts[0].masks[1].get(1, 0));
        assert!(gts[1].masks[0].get(3, 2));

        let tmp2 = tempfile::tempdir().unwrap();
        let clip = solid_clip(2, 4, 4, [0, 0, 0]).unwrap();
        let m = Masklet {
            target_id: 0,
            masks: vec![Mask::from_fn(4, 4, |x, y| x == y); 2],
        };
        write_masklets(&clip, std::slice::from_ref(&m), tmp2.path(), MaskFormat::PngPerFrame).unwrap();
        let back = load_gt_masklets(tmp2.path(), Some(&[1])).unwrap();
        assert_eq!(back[0].masks, vec![m.masks[1].clone()]);
    }

    proptest! {
        #[test]
        fn subsampling_preserves_order(total in 1usize..300, max in 1usize..50) {
            let ix = subsample_indices(total, Some(max));
            prop_assert_eq!(ix.len(), total.min(max));
            prop_assert!(ix.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(ix.iter().all(|&i| i < total));
        }

        #[test]
        fn rle_json_round_trip(w in 1u32..12, h in 1u32..12, t in 1usize..4, seed in any::<u64>()) {
            let mut s = seed;
            let mut next = move || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) & 1 == 1 };
            let masks: Vec<Mask> = (0..t).map(|_| Mask::from_fn(w, h, |_, _| next())).collect();
            let clip = solid_clip(t, w, h, [0, 0, 0]).unwrap();
            let m = Masklet { target_id: 3, masks };
            let tmp = tempfile::tempdir().unwrap();
            write_masklets(&clip, std::slice::from_ref(&m), tmp.path(), MaskFormat::RleJson).unwrap();
            let back = read_rle_json(&tmp.path().join("masklets.json")).unwrap();
            prop_assert_eq!(back, vec![m.clone()]);

            let tmp = tempfile::tempdir().unwrap();
            write_masklets(&clip, std::slice::from_ref(&m), tmp.path(), MaskFormat::PngPerFrame).unwrap();
            let back = load_gt_masklets(tmp.path(), None).unwrap();
            prop_assert_eq!(&back[0].masks, &m.masks);
        }

        #[test]
        fn overlay_only_touches_mask_and_box(seed in any::<u64>(), bx in 0.0f64..0.5, by in 0.0f64..0.5) {
            let clip = solid_clip(1, 10, 10, [7, 8, 9]).unwrap();
            let mask = Mask::from_fn(10, 10, |x, y| (x as u64 * 31 + y as u64 * 17 + seed).is_multiple_of(5));
            let b = NormBox::new(bx, by, bx + 0.4, by + 0.4);
            let m = Masklet { target_id: 2, masks: vec![mask.clone()] };
            let out = overlay_frame(clip.frame(0), 0, &[m], Some(&[Some(b)]), 0.5);
            let outline = draw::outline_pixels(&b.to_pixels(10, 10), 2, 10, 10);
            for (x, y, p) in out.enumerate_pixels() {
                if !mask.get(x, y) && !outline.contains(&(x, y)) {
                    prop_assert_eq!(*p, Rgb([7, 8, 9]));
                }
            }
        }
    }
}
