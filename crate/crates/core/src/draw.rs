//! Small raster helpers shared by the layout composer and overlay renderer.

use image::{Rgb, RgbImage};

use crate::geometry::Rect;

const PALETTE: [[u8; 3]; 10] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [255, 225, 25],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
];

/// Fixed color for a target id; ids cycle through a 10-entry palette.
pub fn target_color(target_id: usize) -> Rgb<u8> {
    Rgb(PALETTE[target_id % PALETTE.len()])
}

/// `(1 - alpha) * base + alpha * tint`, rounded half away from zero.
pub fn blend(base: Rgb<u8>, tint: Rgb<u8>, alpha: f32) -> Rgb<u8> {
    let mix = |b: u8, t: u8| (b as f32 * (1.0 - alpha) + t as f32 * alpha).round() as u8;
    Rgb([
        mix(base[0], tint[0]),
        mix(base[1], tint[1]),
        mix(base[2], tint[2]),
    ])
}

/// Pixels of a `thickness`-wide outline of `rect`, clipped to `width` × `height`.
pub fn outline_pixels(rect: &Rect, thickness: u32, width: u32, height: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if rect.width() == 0 || rect.height() == 0 {
        return out;
    }
    let t = thickness.max(1);
    for y in rect.y0..rect.y1.min(height) {
        for x in rect.x0..rect.x1.min(width) {
            let on_edge = x < rect.x0 + t
                || x + t >= rect.x1
                || y < rect.y0 + t
                || y + t >= rect.y1;
            if on_edge {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn draw_outline(img: &mut RgbImage, rect: &Rect, color: Rgb<u8>, thickness: u32) {
    let (w, h) = img.dimensions();
    for (x, y) in outline_pixels(rect, thickness, w, h) {
        img.put_pixel(x, y, color);
    }
}

pub fn fill_rect(img: &mut RgbImage, rect: &Rect, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    for y in rect.y0..rect.y1.min(h) {
        for x in rect.x0..rect.x1.min(w) {
            img.put_pixel(x, y, color);
        }
    }
}

// 3x5 glyphs, one row per u8 using the low three bits (MSB = left column).
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];
const HASH: [u8; 5] = [0b101, 0b111, 0b101, 0b111, 0b101];

fn glyph(c: char) -> Option<[u8; 5]> {
    match c {
        '0'..='9' => Some(DIGITS[c as usize - '0' as usize]),
        '#' => Some(HASH),
        _ => None,
    }
}

/// Size in pixels of `text` rendered by [`draw_label`] at `scale`.
pub fn label_size(text: &str, scale: u32) -> (u32, u32) {
    let n = text.chars().filter(|c| glyph(*c).is_some()).count() as u32;
    if n == 0 {
        return (0, 0);
    }
    // one pixel padding around, one pixel gap between glyphs
    ((n * 4 + 1) * scale, 7 * scale)
}

/// Draws `text` (digits and `#` only) as white glyphs on a black plate with
/// its top-left corner at `(x, y)`. Pixels outside the image are skipped.
pub fn draw_label(img: &mut RgbImage, x: u32, y: u32, text: &str, scale: u32) {
    let (lw, lh) = label_size(text, scale);
    if lw == 0 {
        return;
    }
    fill_rect(img, &Rect::from_origin(x, y, lw, lh), Rgb([0, 0, 0]));
    let (w, h) = img.dimensions();
    let glyphs = text.chars().filter_map(glyph);
    for (i, g) in glyphs.enumerate() {
        let gx = x + (1 + i as u32 * 4) * scale;
        let gy = y + scale;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..3u32 {
                if bits & (0b100 >> col) == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let px = gx + col * scale + dx;
                        let py = gy + row as u32 * scale + dy;
                        if px < w && py < h {
                            img.put_pixel(px, py, Rgb([255, 255, 255]));
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_half() {
        let out = blend(Rgb([100, 100, 100]), Rgb([230, 25, 75]), 0.5);
        assert_eq!(out, Rgb([165, 63, 88]));
    }

    #[test]
    fn palette_distinct_for_first_ids() {
        assert_ne!(target_color(0), target_color(1));
        assert_eq!(target_color(0), target_color(10));
    }

    #[test]
    fn label_stays_in_plate() {
        let mut img = RgbImage::from_pixel(40, 20, Rgb([9, 9, 9]));
        draw_label(&mut img, 2, 2, "#12", 2);
        let (lw, lh) = label_size("#12", 2);
        for (x, y, p) in img.enumerate_pixels() {
            let inside = x >= 2 && x < 2 + lw && y >= 2 && y < 2 + lh;
            if !inside {
                assert_eq!(*p, Rgb([9, 9, 9]));
            }
        }
        assert!(img.pixels().any(|p| *p == Rgb([255, 255, 255])));
    }

    #[test]
    fn outline_is_hollow() {
        let px = outline_pixels(&Rect::new(0, 0, 5, 5), 1, 10, 10);
        assert_eq!(px.len(), 16);
        assert!(!px.contains(&(2, 2)));
    }
}
