use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::camera::{project_points, Camera, CameraPose};
use super::mesh::CadModel;
use crate::image::Rect;
use crate::{Error, Result};

/// Binary silhouette with its 4-neighborhood boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    contour: Vec<bool>,
}

impl SilhouetteMask {
    /// Build from raw bits; the contour is every set pixel with at least one
    /// off (or out-of-frame) 4-neighbor.
    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), (width * height) as usize);
        let mut contour = vec![false; bits.len()];
        let (w, h) = (width as i64, height as i64);
        let at = |x: i64, y: i64| -> bool {
            x >= 0 && y >= 0 && x < w && y < h && bits[(y * w + x) as usize]
        };
        for y in 0..h {
            for x in 0..w {
                let idx = (y * w + x) as usize;
                if bits[idx]
                    && (!at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1))
                {
                    contour[idx] = true;
                }
            }
        }
        SilhouetteMask { width, height, bits, contour }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        SilhouetteMask {
            width,
            height,
            bits: vec![false; (width * height) as usize],
            contour: vec![false; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn bit(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn contour_at(&self, x: u32, y: u32) -> bool {
        self.contour[(y * self.width + x) as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contour_bits(&self) -> &[bool] {
        &self.contour
    }

    pub fn pixel_area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Tight bounding rectangle of the set pixels.
    pub fn bounding_box(&self) -> Option<Rect> {
        let (mut x0, mut y0) = (u32::MAX, u32::MAX);
        let (mut x1, mut y1) = (0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.bit(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        any.then(|| Rect::new(x0 as i32, y0 as i32, x1 - x0 + 1, y1 - y0 + 1))
    }

    /// Whole-mask integer translation; pixels shifted out of frame are lost.
    pub fn translated(&self, dx: i32, dy: i32) -> Self {
        let mut bits = vec![false; self.bits.len()];
        let (w, h) = (self.width as i64, self.height as i64);
        for y in 0..h {
            for x in 0..w {
                if self.bits[(y * w + x) as usize] {
                    let nx = x + dx as i64;
                    let ny = y + dy as i64;
                    if nx >= 0 && ny >= 0 && nx < w && ny < h {
                        bits[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        SilhouetteMask::from_bits(self.width, self.height, bits)
    }
}

/// Paint every pixel whose center lies inside the triangle (boundary
/// inclusive). Orientation-insensitive; degenerate triangles paint nothing.
fn fill_triangle(width: u32, height: u32, tri: [[f64; 2]; 3], mut plot: impl FnMut(u32, u32)) {
    let [p0, mut p1, mut p2] = tri;
    let area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        core::mem::swap(&mut p1, &mut p2);
    }
    let min_x = p0[0].min(p1[0]).min(p2[0]);
    let max_x = p0[0].max(p1[0]).max(p2[0]);
    let min_y = p0[1].min(p1[1]).min(p2[1]);
    let max_y = p0[1].max(p1[1]).max(p2[1]);
    if max_x < 0.0 || max_y < 0.0 || min_x >= width as f64 || min_y >= height as f64 {
        return;
    }
    let x0 = (min_x - 0.5).ceil().max(0.0) as u32;
    let x1 = ((max_x - 0.5).floor() as i64).min(width as i64 - 1);
    let y0 = (min_y - 0.5).ceil().max(0.0) as u32;
    let y1 = ((max_y - 0.5).floor() as i64).min(height as i64 - 1);
    if x1 < x0 as i64 || y1 < y0 as i64 {
        return;
    }
    let edge = |a: [f64; 2], b: [f64; 2], px: f64, py: f64| {
        (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
    };
    for y in y0..=(y1 as u32) {
        let py = y as f64 + 0.5;
        for x in x0..=(x1 as u32) {
            let px = x as f64 + 0.5;
            if edge(p0, p1, px, py) >= 0.0
                && edge(p1, p2, px, py) >= 0.0
                && edge(p2, p0, px, py) >= 0.0
            {
                plot(x, y);
            }
        }
    }
}

/// Rasterize the model's silhouette under the given camera. All faces are
/// filled (back-face inclusive); the occlusion translation shifts the whole
/// silhouette in pixel space by the rounded offset after rasterization.
pub fn render_silhouette(
    model: &CadModel,
    pose: &CameraPose,
    camera: &Camera,
    occ: (f64, f64),
) -> Result<SilhouetteMask> {
    let (pts, _) = project_points(model, pose, camera)?;
    let (w, h) = (camera.viewport_w, camera.viewport_h);
    let mut bits = vec![false; (w * h) as usize];
    for face in &model.faces {
        let tri = [pts[face[0] as usize], pts[face[1] as usize], pts[face[2] as usize]];
        fill_triangle(w, h, tri, |x, y| bits[(y * w + x) as usize] = true);
    }
    let dx = occ.0.round() as i32;
    let dy = occ.1.round() as i32;
    let mask = SilhouetteMask::from_bits(w, h, bits);
    if dx != 0 || dy != 0 {
        Ok(mask.translated(dx, dy))
    } else {
        Ok(mask)
    }
}

/// Silhouette of a normalized model under the standard camera of the
/// viewport. The viewport must be at least 8×8 pixels.
pub fn project_mesh(
    model: &CadModel,
    pose: &CameraPose,
    occ: (f64, f64),
    viewport_w: u32,
    viewport_h: u32,
) -> Result<SilhouetteMask> {
    if viewport_w < 8 || viewport_h < 8 {
        return Err(Error::InvalidRegion("viewport smaller than 8x8".into()));
    }
    render_silhouette(model, pose, &Camera::standard(viewport_w, viewport_h), occ)
}

/// Flat-shaded render used by the synthetic scene generator.
#[derive(Debug, Clone)]
pub struct ShadedRender {
    pub mask: SilhouetteMask,
    /// Row-major intensities; meaningful where the mask bit is set.
    pub shade: Vec<f32>,
}

/// Render with per-face flat shading (painter's order, far faces first).
pub fn render_shaded(
    model: &CadModel,
    pose: &CameraPose,
    camera: &Camera,
    light: [f64; 3],
    ambient: f64,
    diffuse: f64,
) -> Result<ShadedRender> {
    let (pts, depths) = project_points(model, pose, camera)?;
    let lnorm = (light[0] * light[0] + light[1] * light[1] + light[2] * light[2]).sqrt();
    let l = [light[0] / lnorm, light[1] / lnorm, light[2] / lnorm];
    let mut order: Vec<usize> = (0..model.faces.len()).collect();
    let mean_depth = |f: &[u32; 3]| {
        (depths[f[0] as usize] + depths[f[1] as usize] + depths[f[2] as usize]) / 3.0
    };
    order.sort_by(|&a, &b| {
        mean_depth(&model.faces[b])
            .partial_cmp(&mean_depth(&model.faces[a]))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let (w, h) = (camera.viewport_w, camera.viewport_h);
    let mut bits = vec![false; (w * h) as usize];
    let mut shade = vec![0.0f32; (w * h) as usize];
    for fi in order {
        let face = model.faces[fi];
        let [a, b, c] = [
            model.vertices[face[0] as usize],
            model.vertices[face[1] as usize],
            model.vertices[face[2] as usize],
        ];
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let mut n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if nn > 0.0 {
            n = [n[0] / nn, n[1] / nn, n[2] / nn];
        }
        // Winding is not guaranteed; take the unsigned incidence.
        let lambert = (n[0] * l[0] + n[1] * l[1] + n[2] * l[2]).abs();
        let intensity = (ambient + diffuse * lambert) as f32;
        let tri = [pts[face[0] as usize], pts[face[1] as usize], pts[face[2] as usize]];
        fill_triangle(w, h, tri, |x, y| {
            let idx = (y * w + x) as usize;
            bits[idx] = true;
            shade[idx] = intensity;
        });
    }
    Ok(ShadedRender { mask: SilhouetteMask::from_bits(w, h, bits), shade })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::{cuboid, normalize_mesh};

    fn unit_cube() -> CadModel {
        normalize_mesh(&cuboid("cube", [0.0; 3], [0.5; 3])).unwrap()
    }

    #[test]
    fn cube_front_view_is_centered_square() {
        // Analytic projection of the 8 cube corners: at azimuth 0, elevation 0
        // the silhouette is the front face, a square of half-size
        // f*hx/(d-hx) around the viewport center.
        let cube = unit_cube();
        let pose = CameraPose::new(0.0, 0.0, 10.0).unwrap();
        let mask = project_mesh(&cube, &pose, (0.0, 0.0), 64, 64).unwrap();
        let half = 0.5 / 3.0f64.sqrt();
        let expect_half_px = 96.0 * half / (10.0 - half);
        let bbox = mask.bounding_box().unwrap();
        let (cx, cy) = bbox.center();
        assert!((cx - 32.0).abs() <= 1.0, "center x {cx}");
        assert!((cy - 32.0).abs() <= 1.0, "center y {cy}");
        assert!((bbox.w as f64 - 2.0 * expect_half_px).abs() <= 2.0, "w {}", bbox.w);
        assert!((bbox.w as i64 - bbox.h as i64).abs() <= 1, "not square");
    }

    #[test]
    fn occ_shift_out_of_frame_empties_mask() {
        let cube = unit_cube();
        let pose = CameraPose::new(0.3, 0.2, 4.0).unwrap();
        let mask = project_mesh(&cube, &pose, (64.0, 0.0), 64, 64).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn render_is_deterministic() {
        let cube = unit_cube();
        let pose = CameraPose::new(1.0, 0.4, 3.0).unwrap();
        let a = project_mesh(&cube, &pose, (1.7, -2.2), 48, 40).unwrap();
        let b = project_mesh(&cube, &pose, (1.7, -2.2), 48, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contour_pixels_have_outside_neighbor() {
        let cube = unit_cube();
        let pose = CameraPose::new(0.9, 0.5, 3.0).unwrap();
        let mask = project_mesh(&cube, &pose, (0.0, 0.0), 64, 64).unwrap();
        assert!(!mask.is_empty());
        let mut contour_count = 0;
        for y in 0..64 {
            for x in 0..64 {
                if mask.contour_at(x, y) {
                    contour_count += 1;
                    assert!(mask.bit(x, y), "contour outside silhouette");
                    let inside = |x: i64, y: i64| {
                        x >= 0 && y >= 0 && x < 64 && y < 64 && mask.bit(x as u32, y as u32)
                    };
                    let (xi, yi) = (x as i64, y as i64);
                    assert!(
                        !inside(xi - 1, yi)
                            || !inside(xi + 1, yi)
                            || !inside(xi, yi - 1)
                            || !inside(xi, yi + 1)
                    );
                }
            }
        }
        assert!(contour_count > 0);
    }

    #[test]
    fn tiny_viewport_rejected() {
        let cube = unit_cube();
        let pose = CameraPose::new(0.0, 0.0, 3.0).unwrap();
        assert!(project_mesh(&cube, &pose, (0.0, 0.0), 4, 64).is_err());
    }
}
