//! The potential functions of the energy: top-level detector score, global
//! HOG shape, local appearance, and the CAD-contour alignment term maximized
//! over viewpoint particles; plus the total energy of an assignment.
//!
//! Contour renders dominate runtime, so they are memoized by
//! (CAD id, quantized particle, render context).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::features::{compute_hog, contour_hog, AppearanceProvider, AppearanceVector, HogDescriptor};
use crate::geometry::{render_silhouette, CadModel, Camera, CameraPose, SilhouetteMask};
use crate::image::{GrayImage, Rect};
use crate::model::{
    joint_feature_map, validate_assignment, CntValues, ContinuousViewpoint, HierarchyConfig,
    LabelAssignment, RegionFeatures, WeightLayout, WeightVector,
};
use crate::rng::derive_stream;
use crate::sampling::{sample_particles, DistanceReference, ParticleSet};
use crate::{Error, Result};

/// Top-level detector scores, pluggable like the appearance provider.
pub trait DetectorScore {
    /// Real-valued confidence that the region contains the object. The
    /// appearance vector of the region is passed along for detectors that
    /// score appearance features.
    fn score(
        &self,
        image: &GrayImage,
        image_id: &str,
        region: Rect,
        app: &AppearanceVector,
    ) -> Result<f64>;
}

/// The zero detector (useful before a detector is trained).
pub struct ZeroDetector;

impl DetectorScore for ZeroDetector {
    fn score(&self, _: &GrayImage, _: &str, _: Rect, _: &AppearanceVector) -> Result<f64> {
        Ok(0.0)
    }
}

/// Linear logistic detector over appearance vectors; the score is the margin
/// `w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticDetector {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl DetectorScore for LogisticDetector {
    fn score(&self, _: &GrayImage, _: &str, _: Rect, app: &AppearanceVector) -> Result<f64> {
        if app.values.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: app.values.len(),
                what: "detector input",
            });
        }
        Ok(self.bias + self.weights.iter().zip(&app.values).map(|(w, x)| w * x).sum::<f64>())
    }
}

impl DetectorScore for crate::learning::LogisticModel {
    fn score(&self, _: &GrayImage, _: &str, _: Rect, app: &AppearanceVector) -> Result<f64> {
        if app.values.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: app.values.len(),
                what: "detector input",
            });
        }
        Ok(self.score(&app.values))
    }
}

/// File-backed detector scores keyed by (image id, region).
#[derive(Debug, Clone, Default)]
pub struct PrecomputedDetector {
    map: BTreeMap<(String, (i32, i32, u32, u32)), f64>,
}

impl PrecomputedDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, image_id: &str, region: Rect, score: f64) {
        self.map
            .insert((String::from(image_id), (region.x, region.y, region.w, region.h)), score);
    }
}

impl DetectorScore for PrecomputedDetector {
    fn score(&self, _: &GrayImage, image_id: &str, region: Rect, _: &AppearanceVector) -> Result<f64> {
        self.map
            .get(&(String::from(image_id), (region.x, region.y, region.w, region.h)))
            .copied()
            .ok_or_else(|| Error::MissingScore {
                key: format!("{image_id} {} {} {} {}", region.x, region.y, region.w, region.h),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CacheKey {
    cad_id: String,
    quantized: [i64; 5],
    context: u64,
}

fn quantize(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

/// Memo cache for contour-HOG renders, bounded; a full cache is cleared
/// wholesale.
pub struct RenderCache {
    map: BTreeMap<CacheKey, HogDescriptor>,
    capacity: usize,
    hits: u64,
    misses: u64,
}

impl RenderCache {
    pub fn new(capacity: usize) -> Self {
        RenderCache { map: BTreeMap::new(), capacity: capacity.max(1), hits: 0, misses: 0 }
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    fn get_or_insert(
        &mut self,
        key: CacheKey,
        compute: impl FnOnce() -> Result<HogDescriptor>,
    ) -> Result<HogDescriptor> {
        if let Some(hit) = self.map.get(&key) {
            self.hits += 1;
            return Ok(hit.clone());
        }
        self.misses += 1;
        let value = compute()?;
        if self.map.len() >= self.capacity {
            self.map.clear();
        }
        self.map.insert(key, value.clone());
        Ok(value)
    }
}

impl Default for RenderCache {
    fn default() -> Self {
        RenderCache::new(1 << 16)
    }
}

/// Renderer for one (image, region) pair: projects a CAD model with the
/// image's optics into a region-sized viewport centered on the region (plus
/// the particle's occlusion translation).
pub fn region_mask_maker<'a>(
    image_w: u32,
    image_h: u32,
    region: Rect,
) -> Box<dyn Fn(&ContinuousViewpoint, &CadModel) -> Result<SilhouetteMask> + 'a> {
    Box::new(move |cv, cad| {
        let camera = Camera::with_focal_of(image_w, image_h, region.w, region.h);
        let pose = CameraPose::new(cv.azimuth, cv.elevation, cv.distance)?;
        render_silhouette(cad, &pose, &camera, cv.occ)
    })
}

/// Cache context for a render setup (viewport size and focal length).
pub fn render_context(image_w: u32, image_h: u32, region: Rect) -> u64 {
    let focal = Camera::with_focal_of(image_w, image_h, region.w, region.h).focal_px;
    derive_stream(&[focal.to_bits(), region.w as u64, region.h as u64])
}

/// Continuous-viewpoint potential: maximize the normalized inner product of
/// the region's HOG with the contour HOG of the projected CAD model over the
/// particle set. Returns the maximum and the index of the particle attaining
/// it (lowest index on ties).
///
/// Particles that fail to render are skipped; it is an error only if every
/// particle fails (or the set is empty).
pub fn phi_cnt(
    region_hog: &HogDescriptor,
    make_mask: &dyn Fn(&ContinuousViewpoint, &CadModel) -> Result<SilhouetteMask>,
    particles: &ParticleSet,
    cad: &CadModel,
    config: &HierarchyConfig,
    cache: &mut RenderCache,
    context: u64,
) -> Result<(f64, usize)> {
    if particles.particles.is_empty() {
        return Err(Error::NoUsableParticles);
    }
    let norm = config.hog.cell_count() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    let mut any = false;
    for (i, cv) in particles.particles.iter().enumerate() {
        let key = CacheKey {
            cad_id: cad.id.clone(),
            quantized: [
                quantize(cv.azimuth),
                quantize(cv.elevation),
                quantize(cv.distance),
                quantize(cv.occ.0),
                quantize(cv.occ.1),
            ],
            context,
        };
        let contour = match cache.get_or_insert(key, || {
            let mask = make_mask(cv, cad)?;
            contour_hog(&mask, Rect::new(0, 0, mask.width(), mask.height()), &config.hog)
        }) {
            Ok(h) => h,
            Err(_) => continue,
        };
        any = true;
        let value = contour.dot(region_hog) / norm;
        if value > best {
            best = value;
            best_idx = i;
        }
    }
    if !any {
        return Err(Error::NoUsableParticles);
    }
    Ok((best, best_idx))
}

/// Which particles an inference run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticleMode {
    /// The full sampled particle set.
    Full,
    /// Only the anchored particle — the discrete-model ablation (pair with
    /// [`WeightVector::with_zeroed_cnt`]).
    AnchorOnly,
}

/// Everything inference and learning need about one (image, region) pair:
/// the region features plus the φ_cnt tables (value, argmax particle) per
/// azimuth bin for every sub-category and finer-sub-category.
#[derive(Debug, Clone)]
pub struct PotentialBundle {
    pub features: RegionFeatures,
    /// Particle set per azimuth bin (empty for 1-layer configs).
    pub particles: Vec<ParticleSet>,
    /// `[bin][subcat] -> (value, argmax particle)`.
    pub cnt2: Vec<Vec<(f64, usize)>>,
    /// `[bin][global finer] -> (value, argmax particle)`.
    pub cnt3: Vec<Vec<(f64, usize)>>,
}

impl PotentialBundle {
    /// φ_cnt scalars selected by an assignment's labels.
    pub fn cnt_values(&self, assignment: &LabelAssignment) -> Result<CntValues> {
        let mut out = CntValues::default();
        if !assignment.object {
            return Ok(out);
        }
        if let (Some(v), Some(s)) = (assignment.v2, assignment.s2) {
            let row = self.cnt2.get(v).ok_or(Error::MissingCnt { layer: 2, index: v })?;
            out.layer2 = Some(row.get(s).ok_or(Error::MissingCnt { layer: 2, index: s })?.0);
        }
        if let (Some(v), Some(f)) = (assignment.v3, assignment.finer) {
            let row = self.cnt3.get(v).ok_or(Error::MissingCnt { layer: 3, index: v })?;
            out.layer3 = Some(row.get(f).ok_or(Error::MissingCnt { layer: 3, index: f })?.0);
        }
        Ok(out)
    }

    /// Best particle of a layer for an assignment (2 or 3).
    pub fn best_particle(&self, assignment: &LabelAssignment, layer: u8) -> Option<ContinuousViewpoint> {
        match layer {
            2 => {
                let (v, s) = (assignment.v2?, assignment.s2?);
                let idx = self.cnt2.get(v)?.get(s)?.1;
                Some(self.particles.get(v)?.particles[idx])
            }
            3 => {
                let (v, f) = (assignment.v3?, assignment.finer?);
                let idx = self.cnt3.get(v)?.get(f)?.1;
                Some(self.particles.get(v)?.particles[idx])
            }
            _ => None,
        }
    }
}

/// Compute the full potential bundle for a region.
#[allow(clippy::too_many_arguments)]
pub fn compute_bundle(
    image: &GrayImage,
    image_id: &str,
    region: Rect,
    config: &HierarchyConfig,
    refs: &DistanceReference,
    provider: &dyn AppearanceProvider,
    detector: &dyn DetectorScore,
    seed: u64,
    mode: ParticleMode,
    cache: &mut RenderCache,
) -> Result<PotentialBundle> {
    let hog = compute_hog(image, region, &config.hog)?;
    let app = provider.compute(image, image_id, region)?;
    if app.values.len() != config.app_dim {
        return Err(Error::DimensionMismatch {
            expected: config.app_dim,
            got: app.values.len(),
            what: "appearance vector",
        });
    }
    let det = detector.score(image, image_id, region, &app)?;
    let features = RegionFeatures { det, hog, app };

    let mut particles = Vec::new();
    let mut cnt2 = Vec::new();
    let mut cnt3 = Vec::new();
    if config.layers >= 2 {
        let maker = region_mask_maker(image.width(), image.height(), region);
        let context = render_context(image.width(), image.height(), region);
        for bin in 0..config.azimuth_bins {
            let set = sample_particles(bin, region, refs, config, seed)?;
            let set = match mode {
                ParticleMode::Full => set,
                ParticleMode::AnchorOnly => set.anchor_only(),
            };
            let mut row2 = Vec::with_capacity(config.subcat_count());
            for merged in &config.registry.merged {
                row2.push(phi_cnt(&features.hog, maker.as_ref(), &set, merged, config, cache, context)?);
            }
            cnt2.push(row2);
            if config.layers >= 3 {
                let mut row3 = Vec::with_capacity(config.finer_count());
                for cad in &config.registry.finer {
                    row3.push(phi_cnt(&features.hog, maker.as_ref(), &set, cad, config, cache, context)?);
                }
                cnt3.push(row3);
            }
            particles.push(set);
        }
    }
    Ok(PotentialBundle { features, particles, cnt2, cnt3 })
}

/// Energy term identifiers for the breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKey {
    Det,
    Glb(u8),
    Loc(u8),
    Cnt(u8),
}

impl core::fmt::Display for TermKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TermKey::Det => write!(f, "det"),
            TermKey::Glb(l) => write!(f, "glb{l}"),
            TermKey::Loc(l) => write!(f, "loc{l}"),
            TermKey::Cnt(l) => write!(f, "cnt{l}"),
        }
    }
}

/// Per-term energy contributions of one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub terms: Vec<(TermKey, f64)>,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn zero() -> Self {
        EnergyBreakdown { terms: Vec::new(), total: 0.0 }
    }

    pub fn term(&self, key: TermKey) -> Option<f64> {
        self.terms.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

fn slice_dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Total energy of an assignment under the weights, with its per-term
/// breakdown. Equals `⟨w, ψ⟩` of [`joint_feature_map`] exactly; background
/// assignments have energy 0.
pub fn total_energy(
    bundle: &PotentialBundle,
    assignment: &LabelAssignment,
    layout: &WeightLayout,
    weights: &WeightVector,
    config: &HierarchyConfig,
) -> Result<EnergyBreakdown> {
    validate_assignment(assignment, config).map_err(Error::InvalidAssignment)?;
    if !assignment.object {
        return Ok(EnergyBreakdown::zero());
    }
    let w = &weights.values;
    let feats = &bundle.features;
    let v = assignment.v1.expect("validated foreground");
    let mut terms = Vec::with_capacity(8);
    terms.push((TermKey::Det, w[layout.det_index()] * feats.det));
    terms.push((TermKey::Glb(1), slice_dot(&w[layout.glb1(v)], &feats.hog.values)));
    terms.push((TermKey::Loc(1), slice_dot(&w[layout.loc1(v)], &feats.app.values)));
    if config.layers >= 2 {
        let s = assignment.s2.expect("validated layer 2");
        let cnt = bundle.cnt_values(assignment)?;
        terms.push((TermKey::Glb(2), slice_dot(&w[layout.glb2(v, s)], &feats.hog.values)));
        terms.push((TermKey::Loc(2), slice_dot(&w[layout.loc2(v, s)], &feats.app.values)));
        let c2 = cnt.layer2.ok_or(Error::MissingCnt { layer: 2, index: s })?;
        terms.push((TermKey::Cnt(2), w[layout.cnt2(s)] * c2));
        if config.layers >= 3 {
            if let Some(f) = assignment.finer {
                terms.push((TermKey::Glb(3), slice_dot(&w[layout.glb3(v, f)], &feats.hog.values)));
                terms.push((TermKey::Loc(3), slice_dot(&w[layout.loc3(v, f)], &feats.app.values)));
                let c3 = cnt.layer3.ok_or(Error::MissingCnt { layer: 3, index: f })?;
                terms.push((TermKey::Cnt(3), w[layout.cnt3(f)] * c3));
            }
        }
    }
    let total = terms.iter().map(|(_, v)| v).sum();
    Ok(EnergyBreakdown { terms, total })
}

/// ψ of an assignment built from a bundle (convenience for learning and the
/// test oracles).
pub fn feature_map_from_bundle(
    bundle: &PotentialBundle,
    assignment: &LabelAssignment,
    layout: &WeightLayout,
    config: &HierarchyConfig,
) -> Result<Vec<f64>> {
    let cnt = bundle.cnt_values(assignment)?;
    joint_feature_map(layout, &bundle.features, assignment, &cnt, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::HogParams;
    use crate::model::{LabelAssignment, WeightLayout};

    fn dummy_hog(config: &HierarchyConfig, fill: f64) -> HogDescriptor {
        let c = config.hog.cells_per_side();
        HogDescriptor {
            cells_x: c,
            cells_y: c,
            bins: config.hog.bins,
            values: alloc::vec![fill; config.hog.descriptor_len()],
        }
    }

    fn bundle_for(config: &HierarchyConfig, det: f64, hog_fill: f64) -> PotentialBundle {
        let m = config.azimuth_bins;
        let n = config.subcat_count();
        let p = config.finer_count();
        let set = ParticleSet {
            particles: alloc::vec![ContinuousViewpoint {
                azimuth: 0.0,
                elevation: 0.2,
                distance: 3.0,
                occ: (0.0, 0.0)
            }],
            seed: 0,
            source_bin: 0,
        };
        PotentialBundle {
            features: RegionFeatures {
                det,
                hog: dummy_hog(config, hog_fill),
                app: AppearanceVector {
                    values: alloc::vec![0.5; config.app_dim],
                    provider_id: "t".into(),
                },
            },
            particles: alloc::vec![set; m],
            cnt2: alloc::vec![alloc::vec![(0.25, 0); n]; m],
            cnt3: alloc::vec![alloc::vec![(0.125, 0); p]; m],
        }
    }

    #[test]
    fn zero_weights_zero_energy() {
        let config = crate::model::tests::tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let w = WeightVector::zeros(&layout, config.structure_hash());
        let bundle = bundle_for(&config, 1.0, 0.5);
        let a = LabelAssignment::foreground(&config, 1, Some(1), Some(2));
        let e = total_energy(&bundle, &a, &layout, &w, &config).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn background_energy_is_zero() {
        let config = crate::model::tests::tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let mut w = WeightVector::zeros(&layout, config.structure_hash());
        for v in &mut w.values {
            *v = 0.7;
        }
        let bundle = bundle_for(&config, 1.0, 0.5);
        let e = total_energy(&bundle, &LabelAssignment::background(), &layout, &w, &config).unwrap();
        assert_eq!(e.total, 0.0);
        assert!(e.terms.is_empty());
    }

    #[test]
    fn energy_matches_feature_map_inner_product() {
        let config = crate::model::tests::tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let mut rng = crate::rng::CounterRng::new(5, 0);
        let bundle = bundle_for(&config, 0.8, 0.3);
        for trial in 0..20 {
            let mut w = WeightVector::zeros(&layout, config.structure_hash());
            for v in &mut w.values {
                *v = rng.uniform_in(-1.0, 1.0);
            }
            let v = trial % 4;
            let s = trial % 2;
            let f = if trial % 3 == 0 { None } else { Some(config.finer_range(s).start + trial % 2) };
            let a = LabelAssignment::foreground(&config, v, Some(s), f);
            let e = total_energy(&bundle, &a, &layout, &w, &config).unwrap();
            let psi = feature_map_from_bundle(&bundle, &a, &layout, &config).unwrap();
            let dot = w.dot(&psi);
            assert!((e.total - dot).abs() < 1e-9, "trial {trial}: {} vs {dot}", e.total);
            // Breakdown must sum to the total.
            let sum: f64 = e.terms.iter().map(|(_, x)| x).sum();
            assert!((sum - e.total).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_linear_in_weights() {
        let config = crate::model::tests::tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let bundle = bundle_for(&config, 0.8, 0.3);
        let mut w = WeightVector::zeros(&layout, config.structure_hash());
        let mut rng = crate::rng::CounterRng::new(6, 0);
        for v in &mut w.values {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        let mut w3 = w.clone();
        for v in &mut w3.values {
            *v *= 3.0;
        }
        let a = LabelAssignment::foreground(&config, 2, Some(0), Some(1));
        let e1 = total_energy(&bundle, &a, &layout, &w, &config).unwrap().total;
        let e3 = total_energy(&bundle, &a, &layout, &w3, &config).unwrap().total;
        assert!((e3 - 3.0 * e1).abs() < 1e-9);
    }

    #[test]
    fn missing_cnt_is_an_error() {
        let config = crate::model::tests::tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let w = WeightVector::zeros(&layout, config.structure_hash());
        let mut bundle = bundle_for(&config, 0.0, 0.0);
        bundle.cnt3[1] = alloc::vec![]; // drop finer entries of bin 1
        let a = LabelAssignment::foreground(&config, 1, Some(0), Some(0));
        assert!(matches!(
            total_energy(&bundle, &a, &layout, &w, &config),
            Err(Error::MissingCnt { layer: 3, .. })
        ));
    }

    #[test]
    fn phi_cnt_zero_region_hog_gives_zero() {
        let config = crate::model::tests::tiny_config(4, 3);
        let mut cache = RenderCache::default();
        let cad = crate::geometry::normalize_mesh(&crate::geometry::CadModel::new(
            "c",
            alloc::vec![
                [-0.3, -0.2, -0.1],
                [0.3, -0.2, -0.1],
                [0.0, 0.25, -0.1],
                [0.0, 0.0, 0.3]
            ],
            alloc::vec![[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]],
        )
        .unwrap())
        .unwrap();
        let set = ParticleSet {
            particles: alloc::vec![
                ContinuousViewpoint { azimuth: 0.3, elevation: 0.2, distance: 3.0, occ: (0.0, 0.0) },
                ContinuousViewpoint { azimuth: 1.3, elevation: 0.4, distance: 3.5, occ: (1.0, 2.0) },
            ],
            seed: 0,
            source_bin: 0,
        };
        let maker = region_mask_maker(64, 64, Rect::new(0, 0, 64, 64));
        let zero_hog = HogDescriptor {
            cells_x: 8,
            cells_y: 8,
            bins: 9,
            values: alloc::vec![0.0; HogParams::default().descriptor_len()],
        };
        let (value, _) =
            phi_cnt(&zero_hog, maker.as_ref(), &set, &cad, &config, &mut cache, 1).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn phi_cnt_max_monotone_in_particles() {
        let config = crate::model::tests::tiny_config(4, 3);
        let cad = crate::geometry::normalize_mesh(&crate::geometry::mesh_for_tests()).unwrap();
        let maker = region_mask_maker(96, 96, Rect::new(16, 16, 64, 64));
        let context = render_context(96, 96, Rect::new(16, 16, 64, 64));
        // Region HOG from a rendered view of the same CAD, so values differ
        // across particles.
        let mask = maker(
            &ContinuousViewpoint { azimuth: 0.5, elevation: 0.3, distance: 3.0, occ: (0.0, 0.0) },
            &cad,
        )
        .unwrap();
        let region_hog =
            contour_hog(&mask, Rect::new(0, 0, mask.width(), mask.height()), &config.hog).unwrap();
        let mut particles = alloc::vec![
            ContinuousViewpoint { azimuth: 2.0, elevation: 0.1, distance: 4.0, occ: (0.0, 0.0) },
            ContinuousViewpoint { azimuth: 4.0, elevation: 0.5, distance: 2.5, occ: (3.0, -2.0) },
        ];
        let small = ParticleSet { particles: particles.clone(), seed: 0, source_bin: 0 };
        let mut cache = RenderCache::default();
        let (v_small, _) =
            phi_cnt(&region_hog, maker.as_ref(), &small, &cad, &config, &mut cache, context).unwrap();
        particles.push(ContinuousViewpoint {
            azimuth: 0.5,
            elevation: 0.3,
            distance: 3.0,
            occ: (0.0, 0.0),
        });
        let big = ParticleSet { particles, seed: 0, source_bin: 0 };
        let (v_big, idx) =
            phi_cnt(&region_hog, maker.as_ref(), &big, &cad, &config, &mut cache, context).unwrap();
        assert!(v_big >= v_small);
        // The matched pose must win and re-evaluate to the same value.
        assert_eq!(idx, 2);
        let only = ParticleSet { particles: alloc::vec![big.particles[idx]], seed: 0, source_bin: 0 };
        let mut fresh = RenderCache::default();
        let (v_only, _) =
            phi_cnt(&region_hog, maker.as_ref(), &only, &cad, &config, &mut fresh, context).unwrap();
        assert!((v_only - v_big).abs() < 1e-12);
    }
}
