//! Histogram-of-oriented-gradients descriptors.
//!
//! Regions are resampled to a fixed canonical template so every descriptor
//! (and every weight block) shares one length regardless of region size. The
//! exact definition, which the brute-force test oracle mirrors:
//!
//! 1. resample the region to `template`×`template` samples (bilinear, see
//!    [`GrayImage::resample_region`]);
//! 2. centered-difference gradients with clamped borders:
//!    `gx = p[x+1, y] - p[x-1, y]`, `gy = p[x, y+1] - p[x, y-1]`;
//! 3. unsigned orientation `atan2(gy, gx) mod π`, hard-assigned to
//!    `bins` equal sectors; votes weighted by gradient magnitude and
//!    accumulated per `cell_px`×`cell_px` cell (zero-magnitude pixels vote
//!    nothing);
//! 4. L2-hys normalization over non-overlapping 2×2-cell blocks: divide by
//!    the block L2 norm (skip zero blocks), clip at 0.2, renormalize.
//!
//! Normalization uses no epsilon, so scaling all image intensities leaves the
//! descriptor exactly unchanged wherever there is gradient energy.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::SilhouetteMask;
use crate::image::{GrayImage, Rect};
use crate::{Error, Result};

/// HOG configuration. Defaults are the canonical 64 px template, 8 px cells,
/// 9 unsigned orientation bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HogParams {
    pub template: u32,
    pub cell_px: u32,
    pub bins: u32,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams { template: 64, cell_px: 8, bins: 9 }
    }
}

impl HogParams {
    pub fn cells_per_side(&self) -> u32 {
        self.template / self.cell_px
    }

    /// Number of cells in the canonical template (the `|R|` normalizer of the
    /// continuous-viewpoint potential).
    pub fn cell_count(&self) -> usize {
        let c = self.cells_per_side() as usize;
        c * c
    }

    pub fn descriptor_len(&self) -> usize {
        self.cell_count() * self.bins as usize
    }
}

/// Block-normalized orientation histograms of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct HogDescriptor {
    pub cells_x: u32,
    pub cells_y: u32,
    pub bins: u32,
    pub values: Vec<f64>,
}

impl HogDescriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Inner product; descriptors must have identical shape.
    pub fn dot(&self, other: &HogDescriptor) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

fn check_region(image_w: u32, image_h: u32, region: Rect, params: &HogParams) -> Result<()> {
    if region.area() == 0 {
        return Err(Error::InvalidRegion("empty region".into()));
    }
    if region.x < 0
        || region.y < 0
        || region.right() > image_w as i64
        || region.bottom() > image_h as i64
    {
        return Err(Error::InvalidRegion("region extends past the image".into()));
    }
    if region.w < params.cell_px || region.h < params.cell_px {
        return Err(Error::InvalidRegion("region smaller than one HOG cell".into()));
    }
    Ok(())
}

fn hog_of_patch(patch: &[f64], params: &HogParams) -> HogDescriptor {
    let t = params.template as usize;
    let cells = params.cells_per_side() as usize;
    let bins = params.bins as usize;
    let cell = params.cell_px as usize;
    let mut values = vec![0.0f64; cells * cells * bins];
    let bin_width = PI / bins as f64;
    for y in 0..t {
        let cy = y / cell;
        if cy >= cells {
            break;
        }
        let y0 = if y == 0 { 0 } else { y - 1 };
        let y1 = if y + 1 < t { y + 1 } else { t - 1 };
        for x in 0..t {
            let cx = x / cell;
            if cx >= cells {
                continue;
            }
            let x0 = if x == 0 { 0 } else { x - 1 };
            let x1 = if x + 1 < t { x + 1 } else { t - 1 };
            let gx = patch[y * t + x1] - patch[y * t + x0];
            let gy = patch[y1 * t + x] - patch[y0 * t + x];
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx) % PI;
            if theta < 0.0 {
                theta += PI;
            }
            let mut bin = (theta / bin_width) as usize;
            if bin >= bins {
                bin = bins - 1;
            }
            values[(cy * cells + cx) * bins + bin] += mag;
        }
    }
    normalize_blocks(&mut values, cells, cells, bins);
    HogDescriptor { cells_x: cells as u32, cells_y: cells as u32, bins: bins as u32, values }
}

fn normalize_blocks(values: &mut [f64], cells_x: usize, cells_y: usize, bins: usize) {
    let mut bj = 0;
    while bj < cells_y {
        let mut bi = 0;
        let bj_end = (bj + 2).min(cells_y);
        while bi < cells_x {
            let bi_end = (bi + 2).min(cells_x);
            let mut norm_sq = 0.0;
            for cy in bj..bj_end {
                for cx in bi..bi_end {
                    for b in 0..bins {
                        let v = values[(cy * cells_x + cx) * bins + b];
                        norm_sq += v * v;
                    }
                }
            }
            if norm_sq > 0.0 {
                let norm = norm_sq.sqrt();
                let mut clipped_sq = 0.0;
                for cy in bj..bj_end {
                    for cx in bi..bi_end {
                        for b in 0..bins {
                            let v = &mut values[(cy * cells_x + cx) * bins + b];
                            *v = (*v / norm).min(0.2);
                            clipped_sq += *v * *v;
                        }
                    }
                }
                if clipped_sq > 0.0 {
                    let n2 = clipped_sq.sqrt();
                    for cy in bj..bj_end {
                        for cx in bi..bi_end {
                            for b in 0..bins {
                                values[(cy * cells_x + cx) * bins + b] /= n2;
                            }
                        }
                    }
                }
            }
            bi += 2;
        }
        bj += 2;
    }
}

/// HOG descriptor of an image region, resampled to the canonical template.
pub fn compute_hog(image: &GrayImage, region: Rect, params: &HogParams) -> Result<HogDescriptor> {
    check_region(image.width(), image.height(), region, params)?;
    let patch = image.resample_region(region, params.template, params.template)?;
    Ok(hog_of_patch(&patch, params))
}

/// HOG descriptor of a silhouette's contour, clipped to `region` (given in
/// the mask's pixel frame; parts of the region outside the mask read as
/// empty). An empty intersection yields the zero descriptor.
pub fn contour_hog(mask: &SilhouetteMask, region: Rect, params: &HogParams) -> Result<HogDescriptor> {
    if region.area() == 0 {
        return Err(Error::InvalidRegion("empty region".into()));
    }
    if region.w < params.cell_px || region.h < params.cell_px {
        return Err(Error::InvalidRegion("region smaller than one HOG cell".into()));
    }
    let mut raster = GrayImage::new(region.w, region.h);
    for j in 0..region.h {
        let my = region.y as i64 + j as i64;
        if my < 0 || my >= mask.height() as i64 {
            continue;
        }
        for i in 0..region.w {
            let mx = region.x as i64 + i as i64;
            if mx < 0 || mx >= mask.width() as i64 {
                continue;
            }
            if mask.contour_at(mx as u32, my as u32) {
                raster.set(i, j, 1.0);
            }
        }
    }
    compute_hog(&raster, raster.full_rect(), params)
}
