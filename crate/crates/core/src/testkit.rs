//! Independent reference implementations used as test oracles.
//!
//! Everything here deliberately recomputes from first principles — naive
//! per-pixel loops, full cross-product enumeration with validity filtering,
//! feature-map dot products — and shares no code with the implementation
//! paths it checks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::features::AppearanceProvider;
use crate::features::FilterBankProvider;
use crate::geometry::{merge_cad_models, normalize_mesh};
use crate::image::{GrayImage, Rect};
use crate::inference::assignment_loss;
use crate::learning::LossSpec;
use crate::model::{
    joint_feature_map, validate_assignment, CadRegistry, ContinuousViewpoint, GroundTruth,
    HierarchyConfig, LabelAssignment, SampleCounts, SigmaParams, WeightLayout, WeightVector,
};
use crate::potentials::{PotentialBundle, PrecomputedDetector};
use crate::rng::CounterRng;
use crate::sampling::DistanceReference;
use crate::synth::build_shape_library;
use crate::Result;

/// Brute-force HOG reference: same published definition as
/// `features::compute_hog`, written as plain nested loops over an explicit
/// resampled patch, histogram array, and block list.
pub fn brute_force_hog(
    image: &GrayImage,
    region: Rect,
    template: usize,
    cell_px: usize,
    bins: usize,
) -> Vec<f64> {
    // Bilinear resample, one pixel at a time.
    let mut patch = vec![0.0f64; template * template];
    let x_lo = region.x as f64;
    let y_lo = region.y as f64;
    let x_hi = (region.x as i64 + region.w as i64 - 1) as f64;
    let y_hi = (region.y as i64 + region.h as i64 - 1) as f64;
    for j in 0..template {
        for i in 0..template {
            let mut sx = x_lo + (i as f64 + 0.5) * region.w as f64 / template as f64 - 0.5;
            let mut sy = y_lo + (j as f64 + 0.5) * region.h as f64 / template as f64 - 0.5;
            if sx < x_lo {
                sx = x_lo;
            }
            if sx > x_hi {
                sx = x_hi;
            }
            if sy < y_lo {
                sy = y_lo;
            }
            if sy > y_hi {
                sy = y_hi;
            }
            let x0 = sx.floor();
            let y0 = sy.floor();
            let x1 = if x0 + 1.0 > x_hi { x_hi } else { x0 + 1.0 };
            let y1 = if y0 + 1.0 > y_hi { y_hi } else { y0 + 1.0 };
            let tx = sx - x0;
            let ty = sy - y0;
            let sample = |x: f64, y: f64| image.get(x as u32, y as u32) as f64;
            let top = sample(x0, y0) + (sample(x1, y0) - sample(x0, y0)) * tx;
            let bot = sample(x0, y1) + (sample(x1, y1) - sample(x0, y1)) * tx;
            patch[j * template + i] = top + (bot - top) * ty;
        }
    }
    // Per-pixel histogram accumulation.
    let cells = template / cell_px;
    let mut hist = vec![0.0f64; cells * cells * bins];
    for y in 0..template {
        for x in 0..template {
            let cx = x / cell_px;
            let cy = y / cell_px;
            if cx >= cells || cy >= cells {
                continue;
            }
            let xm = if x > 0 { x - 1 } else { 0 };
            let xp = if x + 1 < template { x + 1 } else { template - 1 };
            let ym = if y > 0 { y - 1 } else { 0 };
            let yp = if y + 1 < template { y + 1 } else { template - 1 };
            let gx = patch[y * template + xp] - patch[y * template + xm];
            let gy = patch[yp * template + x] - patch[ym * template + x];
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            while theta < 0.0 {
                theta += PI;
            }
            while theta >= PI {
                theta -= PI;
            }
            let mut bin = (theta / (PI / bins as f64)) as usize;
            if bin >= bins {
                bin = bins - 1;
            }
            hist[(cy * cells + cx) * bins + bin] += mag;
        }
    }
    // Non-overlapping 2x2 block L2-hys.
    let mut by = 0;
    while by < cells {
        let mut bx = 0;
        while bx < cells {
            let mut idxs = Vec::new();
            for cy in by..(by + 2).min(cells) {
                for cx in bx..(bx + 2).min(cells) {
                    for b in 0..bins {
                        idxs.push((cy * cells + cx) * bins + b);
                    }
                }
            }
            let norm: f64 = idxs.iter().map(|&i| hist[i] * hist[i]).sum::<f64>().sqrt();
            if norm > 0.0 {
                for &i in &idxs {
                    hist[i] /= norm;
                    if hist[i] > 0.2 {
                        hist[i] = 0.2;
                    }
                }
                let renorm: f64 = idxs.iter().map(|&i| hist[i] * hist[i]).sum::<f64>().sqrt();
                if renorm > 0.0 {
                    for &i in &idxs {
                        hist[i] /= renorm;
                    }
                }
            }
            bx += 2;
        }
        by += 2;
    }
    hist
}

/// Result of the naive enumerator.
#[derive(Debug, Clone)]
pub struct NaiveBest {
    pub assignment: LabelAssignment,
    pub score: f64,
    /// Energy part of the score (equals the score when no loss is added).
    pub energy: f64,
}

/// Naive exhaustive MAP (or loss-augmented) search.
///
/// Enumerates the full cross product of per-layer labels including the
/// background label at every slot, filters by `validate_assignment`, and
/// scores each survivor as `⟨w, ψ⟩` via the joint feature map (plus the task
/// loss when given). No pruning, no caching, no shared enumeration code with
/// `inference`.
pub fn naive_best_assignment(
    config: &HierarchyConfig,
    layout: &WeightLayout,
    weights: &WeightVector,
    bundle: &PotentialBundle,
    loss: Option<(&LossSpec, &GroundTruth, &[usize])>,
) -> Result<NaiveBest> {
    let m = config.azimuth_bins;
    let n = config.subcat_count();
    let p = config.finer_count();
    let slot = |count: usize| -> Vec<Option<usize>> {
        let mut v: Vec<Option<usize>> = vec![None];
        v.extend((0..count).map(Some));
        v
    };
    let mut best: Option<NaiveBest> = None;
    for object in [false, true] {
        for v1 in slot(m) {
            for v2 in slot(m) {
                for v3 in slot(m) {
                    for s2 in slot(n) {
                        for s3 in slot(n) {
                            for finer in slot(p) {
                                let candidate = LabelAssignment {
                                    object,
                                    v1,
                                    v2,
                                    v3,
                                    s2,
                                    s3,
                                    finer,
                                    cv2: None,
                                    cv3: None,
                                };
                                if validate_assignment(&candidate, config).is_err() {
                                    continue;
                                }
                                let cnt = bundle.cnt_values(&candidate)?;
                                let psi = joint_feature_map(
                                    layout,
                                    &bundle.features,
                                    &candidate,
                                    &cnt,
                                    config,
                                )?;
                                let energy = weights.dot(&psi);
                                let score = match loss {
                                    Some((spec, truth, counts)) => {
                                        energy
                                            + assignment_loss(truth, &candidate, spec, counts, config)
                                    }
                                    None => energy,
                                };
                                let better = match &best {
                                    None => true,
                                    Some(b) => score > b.score,
                                };
                                if better {
                                    best = Some(NaiveBest { assignment: candidate, score, energy });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(best.expect("background is always valid"))
}

/// A randomized small inference instance: tiny hierarchy (4 bins, 2
/// sub-categories with 2 finer each, 12 particles), a noise image, a region,
/// random weights, and a random ground truth. Deterministic per seed.
pub struct OracleInstance {
    pub config: HierarchyConfig,
    pub layout: WeightLayout,
    pub refs: DistanceReference,
    pub image: GrayImage,
    pub image_id: String,
    pub region: Rect,
    pub weights: WeightVector,
    pub truth: GroundTruth,
    pub provider: FilterBankProvider,
    pub detector: PrecomputedDetector,
    pub seed: u64,
}

pub fn oracle_instance(seed: u64) -> Result<OracleInstance> {
    let mut rng = CounterRng::new(seed, 0x0_acc1e);
    let library = build_shape_library(2, 2)?;
    let mut registry = CadRegistry { finer: library.finer_models.clone(), merged: Vec::new() };
    for s in 0..2 {
        let merged = merge_cad_models(&library.finer_models[2 * s..2 * s + 2], 16, 0.5)?;
        registry.merged.push(normalize_mesh(&merged)?);
    }
    let provider = FilterBankProvider::new();
    let config = HierarchyConfig {
        azimuth_bins: 4,
        layers: 3,
        subcategories: library.subcategories.clone(),
        sample_counts: SampleCounts { azimuth: 3, elevation: 2, distance: 2, occlusion: 1 },
        sigmas: SigmaParams {
            sigma_a: (2.0 * PI / 4.0) / 3.0,
            sigma_e: 0.12,
            mu_e: 0.35,
            sigma_r_frac: 0.15,
        },
        c_svm: 1.0,
        hog: crate::features::HogParams::default(),
        app_dim: provider.dim(),
        registry,
    };
    config.validate()?;
    let layout = WeightLayout::new(&config);
    let mut refs = DistanceReference::new();
    for _ in 0..3 {
        refs.push(
            rng.uniform_in(20.0, 60.0),
            rng.uniform_in(20.0, 60.0),
            rng.uniform_in(2.5, 4.5),
        )?;
    }
    let (w, h) = (64u32, 64u32);
    let data = (0..w * h).map(|_| rng.uniform() as f32).collect();
    let image = GrayImage::from_data(w, h, data)?;
    let side = 24 + rng.index(22) as u32;
    let region = Rect::new(
        rng.index((w - side) as usize + 1) as i32,
        rng.index((h - side) as usize + 1) as i32,
        side,
        side,
    );
    let mut weights = WeightVector::zeros(&layout, config.structure_hash());
    for v in &mut weights.values {
        *v = rng.uniform_in(-1.0, 1.0);
    }
    let truth = if rng.uniform() < 0.25 {
        GroundTruth::Background
    } else {
        let subcat = rng.index(2);
        let finer = config.finer_range(subcat).start + rng.index(2);
        GroundTruth::Object {
            v_bin: rng.index(4),
            viewpoint: ContinuousViewpoint {
                azimuth: rng.uniform_in(0.0, 2.0 * PI),
                elevation: rng.uniform_in(0.1, 0.6),
                distance: rng.uniform_in(2.5, 4.5),
                occ: (0.0, 0.0),
            },
            subcat,
            finer,
        }
    };
    let image_id = alloc::format!("oracle_{seed}");
    let mut detector = PrecomputedDetector::new();
    detector.insert(&image_id, region, rng.uniform_in(-1.0, 1.0));
    Ok(OracleInstance {
        config,
        layout,
        refs,
        image,
        image_id,
        region,
        weights,
        truth,
        provider,
        detector,
        seed,
    })
}
