//! Local-appearance features.
//!
//! The hierarchy's local-appearance potentials are computed by a pluggable
//! provider so precomputed features (e.g. from an external network) can be
//! injected from a file. The built-in provider convolves a small bank of
//! oriented odd Gabor-like kernels and average-pools the absolute responses.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::image::{GrayImage, Rect};
use crate::{Error, Result};

/// Fixed-length appearance feature of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceVector {
    pub values: Vec<f64>,
    pub provider_id: String,
}

pub trait AppearanceProvider {
    fn provider_id(&self) -> &str;
    /// Declared feature dimension; every returned vector has this length.
    fn dim(&self) -> usize;
    fn compute(&self, image: &GrayImage, image_id: &str, region: Rect) -> Result<AppearanceVector>;
}

/// One oriented zero-mean kernel, stored as (dx, dy, weight) taps with each
/// tap immediately followed by its mirrored negation, so responses on
/// constant inputs cancel exactly.
struct OddKernel {
    taps: Vec<(i32, i32, f64)>,
}

impl OddKernel {
    fn oriented(theta: f64, sigma: f64, radius: i32) -> Self {
        let freq = core::f64::consts::PI / (2.0 * sigma);
        let (c, s) = (theta.cos(), theta.sin());
        let mut taps = Vec::new();
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                // Keep one tap per mirrored pair.
                if dy < 0 || (dy == 0 && dx <= 0) {
                    continue;
                }
                let u = dx as f64 * c + dy as f64 * s;
                let r2 = (dx * dx + dy * dy) as f64;
                let w = (freq * u).sin() * (-r2 / (2.0 * sigma * sigma)).exp();
                if w.abs() < 1e-12 {
                    continue;
                }
                taps.push((dx, dy, w));
                taps.push((-dx, -dy, -w));
            }
        }
        OddKernel { taps }
    }

    /// Response at (x, y) with replicate padding.
    fn response(&self, patch: &[f64], side: i32, x: i32, y: i32) -> f64 {
        let mut acc = 0.0;
        for &(dx, dy, w) in &self.taps {
            let px = (x + dx).clamp(0, side - 1);
            let py = (y + dy).clamp(0, side - 1);
            acc += w * patch[(py * side + px) as usize];
        }
        acc
    }
}

/// Built-in appearance provider: 4 orientations × 2 scales of odd Gabor-like
/// kernels on a 32×32 patch, mean absolute response pooled over the 2×2
/// quadrants (dimension 32).
pub struct FilterBankProvider {
    kernels: Vec<OddKernel>,
}

const PATCH: u32 = 32;
const POOL: u32 = 2;

impl FilterBankProvider {
    pub fn new() -> Self {
        let mut kernels = Vec::new();
        for &sigma in &[1.4, 2.8] {
            for k in 0..4 {
                let theta = k as f64 * core::f64::consts::PI / 4.0;
                kernels.push(OddKernel::oriented(theta, sigma, 3));
            }
        }
        FilterBankProvider { kernels }
    }
}

impl Default for FilterBankProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl AppearanceProvider for FilterBankProvider {
    fn provider_id(&self) -> &str {
        "filter-bank"
    }

    fn dim(&self) -> usize {
        self.kernels.len() * (POOL * POOL) as usize
    }

    fn compute(&self, image: &GrayImage, _image_id: &str, region: Rect) -> Result<AppearanceVector> {
        if region.area() == 0 {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        let patch = image.resample_region(region, PATCH, PATCH)?;
        let side = PATCH as i32;
        let quad = (PATCH / POOL) as i32;
        let mut values = Vec::with_capacity(self.dim());
        for kernel in &self.kernels {
            for qy in 0..POOL as i32 {
                for qx in 0..POOL as i32 {
                    let mut acc = 0.0;
                    for y in (qy * quad)..((qy + 1) * quad) {
                        for x in (qx * quad)..((qx + 1) * quad) {
                            acc += kernel.response(&patch, side, x, y).abs();
                        }
                    }
                    values.push(acc / (quad * quad) as f64);
                }
            }
        }
        Ok(AppearanceVector { values, provider_id: String::from(self.provider_id()) })
    }
}

fn region_key(image_id: &str, region: Rect) -> (String, (i32, i32, u32, u32)) {
    (String::from(image_id), (region.x, region.y, region.w, region.h))
}

/// File-backed provider returning precomputed vectors keyed by
/// (image id, region).
pub struct PrecomputedProvider {
    id: String,
    dim: usize,
    map: BTreeMap<(String, (i32, i32, u32, u32)), Vec<f64>>,
}

impl PrecomputedProvider {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        PrecomputedProvider { id: id.into(), dim, map: BTreeMap::new() }
    }

    pub fn insert(&mut self, image_id: &str, region: Rect, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
                what: "precomputed feature",
            });
        }
        self.map.insert(region_key(image_id, region), values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl AppearanceProvider for PrecomputedProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn compute(&self, _image: &GrayImage, image_id: &str, region: Rect) -> Result<AppearanceVector> {
        match self.map.get(&region_key(image_id, region)) {
            Some(values) => Ok(AppearanceVector {
                values: values.clone(),
                provider_id: self.id.clone(),
            }),
            None => Err(Error::MissingFeature {
                key: format!("{image_id} {} {} {} {}", region.x, region.y, region.w, region.h),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_pools_to_exact_zero() {
        let provider = FilterBankProvider::new();
        let mut img = GrayImage::new(40, 40);
        img.map_in_place(|_| 0.6);
        let v = provider.compute(&img, "img", Rect::new(0, 0, 40, 40)).unwrap();
        assert_eq!(v.values.len(), provider.dim());
        assert!(v.values.iter().all(|&x| x == 0.0), "{:?}", v.values);
    }

    #[test]
    fn repeated_calls_are_identical() {
        let provider = FilterBankProvider::new();
        let mut img = GrayImage::new(48, 48);
        for y in 0..48 {
            for x in 0..48 {
                img.set(x, y, ((x * 3 + y * 11) % 19) as f32 / 18.0);
            }
        }
        let a = provider.compute(&img, "img", Rect::new(4, 4, 40, 40)).unwrap();
        let b = provider.compute(&img, "img", Rect::new(4, 4, 40, 40)).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().any(|&x| x > 0.0));
    }

    #[test]
    fn precomputed_round_trip_and_missing_key() {
        let mut provider = PrecomputedProvider::new("file", 3);
        let r1 = Rect::new(0, 0, 10, 10);
        let r2 = Rect::new(5, 5, 8, 8);
        provider.insert("a", r1, alloc::vec![1.0, 2.0, 3.0]).unwrap();
        provider.insert("b", r2, alloc::vec![-1.0, 0.5, 0.0]).unwrap();
        let img = GrayImage::new(16, 16);
        assert_eq!(
            provider.compute(&img, "a", r1).unwrap().values,
            alloc::vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            provider.compute(&img, "b", r2).unwrap().values,
            alloc::vec![-1.0, 0.5, 0.0]
        );
        let err = provider.compute(&img, "c", r1).unwrap_err();
        match err {
            Error::MissingFeature { key } => assert!(key.contains('c')),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn precomputed_rejects_wrong_dimension() {
        let mut provider = PrecomputedProvider::new("file", 3);
        assert!(provider.insert("a", Rect::new(0, 0, 4, 4), alloc::vec![1.0]).is_err());
    }
}
