//! Grayscale rasters and pixel rectangles.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Axis-aligned pixel rectangle. `x`/`y` may be negative (a rectangle is a
/// coordinate frame, not necessarily a sub-window of an image).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x) as i64;
        let y0 = self.y.max(other.y) as i64;
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 > x0 && y1 > y0 {
            Some(Rect::new(x0 as i32, y0 as i32, (x1 - x0) as u32, (y1 - y0) as u32))
        } else {
            None
        }
    }

    /// Intersection over union; 0 when both rectangles are empty.
    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersect(other).map(|r| r.area()).unwrap_or(0) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= self.x as i64 && y >= self.y as i64 && x < self.right() && y < self.bottom()
    }
}

/// Grayscale raster with `f32` samples, normally in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage { width, height, data: vec![0.0; (width * height) as usize] }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width as usize) * (height as usize),
                got: data.len(),
                what: "image data",
            });
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn map_in_place(&mut self, f: impl Fn(f32) -> f32) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Resample `region` of this image to a `tw`×`th` grid of `f64` samples.
    ///
    /// Output pixel `(i, j)` samples the source at
    /// `x = region.x + (i + 0.5) * region.w / tw - 0.5` (same for `y`) with
    /// bilinear interpolation; sample coordinates are clamped to the region so
    /// content outside the region never leaks in. This makes the operation
    /// exactly equivariant to integer translations of (region, content).
    pub fn resample_region(&self, region: Rect, tw: u32, th: u32) -> Result<Vec<f64>> {
        if region.area() == 0 {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        if region.x < 0
            || region.y < 0
            || region.right() > self.width as i64
            || region.bottom() > self.height as i64
        {
            return Err(Error::InvalidRegion("region extends past the image".into()));
        }
        let mut out = Vec::with_capacity((tw * th) as usize);
        let (rx, ry) = (region.x as f64, region.y as f64);
        let x_hi = region.x as i64 + region.w as i64 - 1;
        let y_hi = region.y as i64 + region.h as i64 - 1;
        for j in 0..th {
            let sy = ry + (j as f64 + 0.5) * region.h as f64 / th as f64 - 0.5;
            let sy = sy.max(ry).min(y_hi as f64);
            let y0 = sy.floor() as i64;
            let y1 = (y0 + 1).min(y_hi);
            let ty = sy - y0 as f64;
            for i in 0..tw {
                let sx = rx + (i as f64 + 0.5) * region.w as f64 / tw as f64 - 0.5;
                let sx = sx.max(rx).min(x_hi as f64);
                let x0 = sx.floor() as i64;
                let x1 = (x0 + 1).min(x_hi);
                let tx = sx - x0 as f64;
                let p00 = self.get(x0 as u32, y0 as u32) as f64;
                let p10 = self.get(x1 as u32, y0 as u32) as f64;
                let p01 = self.get(x0 as u32, y1 as u32) as f64;
                let p11 = self.get(x1 as u32, y1 as u32) as f64;
                let top = p00 + (p10 - p00) * tx;
                let bot = p01 + (p11 - p01) * tx;
                out.push(top + (bot - top) * ty);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_basics() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(5, 0, 10, 10);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(20, 20, 5, 5)), 0.0);
    }

    #[test]
    fn resample_identity() {
        let mut img = GrayImage::new(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                img.set(x, y, (y * 4 + x) as f32);
            }
        }
        let out = img.resample_region(img.full_rect(), 4, 4).unwrap();
        for y in 0..4u32 {
            for x in 0..4u32 {
                assert!((out[(y * 4 + x) as usize] - img.get(x, y) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resample_shift_equivariance() {
        let mut img = GrayImage::new(24, 24);
        for y in 0..24 {
            for x in 0..24 {
                img.set(x, y, ((x * 31 + y * 7) % 13) as f32);
            }
        }
        let mut shifted = GrayImage::new(24, 24);
        for y in 0..20 {
            for x in 0..20 {
                shifted.set(x + 4, y + 2, img.get(x, y));
            }
        }
        let a = img.resample_region(Rect::new(2, 3, 10, 9), 16, 16).unwrap();
        let b = shifted.resample_region(Rect::new(6, 5, 10, 9), 16, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resample_rejects_out_of_bounds() {
        let img = GrayImage::new(8, 8);
        assert!(img.resample_region(Rect::new(4, 4, 8, 8), 4, 4).is_err());
        assert!(img.resample_region(Rect::new(0, 0, 0, 4), 4, 4).is_err());
    }
}
