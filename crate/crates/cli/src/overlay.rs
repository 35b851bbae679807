//! Detection overlays: the estimated CAD contour, the detection box, and a
//! small text label drawn onto a copy of the input image.

use anyhow::{Context, Result};
use hierdet_core::eval::DetectionRecord;
use hierdet_core::geometry::{render_silhouette, Camera, CameraPose};
use hierdet_core::image::GrayImage;
use hierdet_core::model::HierarchyConfig;

/// 3x5 pixel glyphs; each row is a 3-bit pattern, MSB left.
fn glyph(c: char) -> [u8; 5] {
    match c {
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        'B' => [0b110, 0b101, 0b110, 0b101, 0b110],
        'C' => [0b011, 0b100, 0b100, 0b100, 0b011],
        'D' => [0b110, 0b101, 0b101, 0b101, 0b110],
        'E' => [0b111, 0b100, 0b110, 0b100, 0b111],
        'F' => [0b111, 0b100, 0b110, 0b100, 0b100],
        'G' => [0b011, 0b100, 0b101, 0b101, 0b011],
        'H' => [0b101, 0b101, 0b111, 0b101, 0b101],
        'I' => [0b111, 0b010, 0b010, 0b010, 0b111],
        'J' => [0b001, 0b001, 0b001, 0b101, 0b010],
        'K' => [0b101, 0b110, 0b100, 0b110, 0b101],
        'L' => [0b100, 0b100, 0b100, 0b100, 0b111],
        'M' => [0b101, 0b111, 0b111, 0b101, 0b101],
        'N' => [0b101, 0b111, 0b111, 0b111, 0b101],
        'O' => [0b010, 0b101, 0b101, 0b101, 0b010],
        'P' => [0b110, 0b101, 0b110, 0b100, 0b100],
        'Q' => [0b010, 0b101, 0b101, 0b011, 0b001],
        'R' => [0b110, 0b101, 0b110, 0b101, 0b101],
        'S' => [0b011, 0b100, 0b010, 0b001, 0b110],
        'T' => [0b111, 0b010, 0b010, 0b010, 0b010],
        'U' => [0b101, 0b101, 0b101, 0b101, 0b111],
        'V' => [0b101, 0b101, 0b101, 0b101, 0b010],
        'W' => [0b101, 0b101, 0b111, 0b111, 0b101],
        'X' => [0b101, 0b101, 0b010, 0b101, 0b101],
        'Y' => [0b101, 0b101, 0b010, 0b010, 0b010],
        'Z' => [0b111, 0b001, 0b010, 0b100, 0b111],
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b110, 0b001, 0b010, 0b100, 0b111],
        '3' => [0b110, 0b001, 0b010, 0b001, 0b110],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b110, 0b001, 0b110],
        '6' => [0b011, 0b100, 0b110, 0b101, 0b010],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b010, 0b101, 0b010, 0b101, 0b010],
        '9' => [0b010, 0b101, 0b011, 0b001, 0b110],
        '/' => [0b001, 0b001, 0b010, 0b100, 0b100],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        _ => [0b000; 5],
    }
}

fn put(image: &mut GrayImage, x: i64, y: i64, v: f32) {
    if x >= 0 && y >= 0 && x < image.width() as i64 && y < image.height() as i64 {
        image.set(x as u32, y as u32, v);
    }
}

/// Draw `text` (uppercased; unknown characters render blank) with its top
/// left corner at (x, y).
pub fn draw_text(image: &mut GrayImage, x: i64, y: i64, text: &str, value: f32) {
    let mut cx = x;
    for ch in text.to_ascii_uppercase().chars() {
        if ch != ' ' {
            let rows = glyph(ch);
            for (ry, row) in rows.iter().enumerate() {
                for rx in 0..3 {
                    if row & (0b100 >> rx) != 0 {
                        put(image, cx + rx as i64, y + ry as i64, value);
                    }
                }
            }
        }
        cx += 4;
    }
}

fn draw_box(image: &mut GrayImage, region: hierdet_core::image::Rect, value: f32) {
    for dx in 0..region.w as i64 {
        put(image, region.x as i64 + dx, region.y as i64, value);
        put(image, region.x as i64 + dx, region.bottom() - 1, value);
    }
    for dy in 0..region.h as i64 {
        put(image, region.x as i64, region.y as i64 + dy, value);
        put(image, region.right() - 1, region.y as i64 + dy, value);
    }
}

/// Overlay a detection: projected contour of the estimated finer CAD at the
/// estimated continuous viewpoint, the detection box, and the label text.
pub fn draw_overlay(
    image: &GrayImage,
    det: &DetectionRecord,
    config: &HierarchyConfig,
) -> Result<GrayImage> {
    let mut canvas = image.clone();
    if let Some(f) = det.finer {
        let cad = config
            .registry
            .finer
            .get(f)
            .with_context(|| format!("no CAD model for finer index {f}"))?;
        let camera =
            Camera::with_focal_of(image.width(), image.height(), det.region.w, det.region.h);
        let pose = CameraPose::new(det.azimuth, det.elevation, det.distance)?;
        let mask = render_silhouette(cad, &pose, &camera, det.occ)?;
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if mask.contour_at(x, y) {
                    put(&mut canvas, det.region.x as i64 + x as i64, det.region.y as i64 + y as i64, 1.0);
                }
            }
        }
    }
    draw_box(&mut canvas, det.region, 1.0);
    let subcat = det
        .subcat
        .map(|s| config.subcategories[s].name.clone())
        .unwrap_or_else(|| "-".into());
    let finer = det.finer.map(|f| config.finer_name(f).to_string()).unwrap_or_else(|| "-".into());
    let label = format!("{subcat}/{finer} V{}", det.v_bin);
    let ty = if det.region.y >= 7 { det.region.y as i64 - 7 } else { det.region.bottom() + 2 };
    draw_text(&mut canvas, det.region.x as i64, ty, &label, 1.0);
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hierdet_core::image::Rect;

    #[test]
    fn text_marks_pixels() {
        let mut img = GrayImage::new(64, 16);
        draw_text(&mut img, 1, 1, "AB 0/1", 1.0);
        assert!(img.data().iter().any(|&v| v == 1.0));
    }

    #[test]
    fn box_outline_stays_in_bounds() {
        let mut img = GrayImage::new(32, 32);
        draw_box(&mut img, Rect::new(-5, -5, 20, 20), 1.0);
        draw_box(&mut img, Rect::new(20, 25, 30, 30), 1.0);
        // Nothing panicked and some border pixels are set.
        assert!(img.data().iter().any(|&v| v == 1.0));
    }
}
