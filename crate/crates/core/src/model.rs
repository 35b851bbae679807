//! Label spaces of the hierarchy, joint assignments, the blocked weight
//! vector, and the joint feature map tying energies to learning.
//!
//! The total energy of an assignment is `⟨w, ψ(x, y)⟩` exactly: the feature
//! map places the detector score, the region's HOG and appearance
//! descriptors, and the continuous-viewpoint potentials into the weight
//! blocks selected by the assignment's labels. The background assignment maps
//! to the zero vector, so background energy is identically 0.
//!
//! Across-layer consistency (equal discrete viewpoint on all layers, equal
//! sub-category on layers 2 and 3) is enforced by construction: only
//! consistent assignments are ever enumerated, and the consistency weights
//! are retained as fixed zeros.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::features::{AppearanceVector, HogDescriptor, HogParams};
use crate::geometry::CadModel;
use crate::image::Rect;
use crate::{Error, Result};

/// Continuous viewpoint: azimuth/elevation/distance of the camera plus the
/// pixel-space occlusion translation of the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousViewpoint {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub occ: (f64, f64),
}

/// Per-axis particle counts for continuous-viewpoint sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCounts {
    pub azimuth: usize,
    pub elevation: usize,
    pub distance: usize,
    pub occlusion: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        // 5 * 3 * 2 * 2 = 60 viewpoint samples per azimuth bin.
        SampleCounts { azimuth: 5, elevation: 3, distance: 2, occlusion: 2 }
    }
}

impl SampleCounts {
    pub fn total(&self) -> usize {
        self.azimuth * self.elevation * self.distance * self.occlusion
    }
}

/// Standard deviations (and the elevation mean) for particle sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaParams {
    pub sigma_a: f64,
    pub sigma_e: f64,
    pub mu_e: f64,
    /// σ_r as a fraction of L = max(region width, height), applied per region.
    pub sigma_r_frac: f64,
}

impl SigmaParams {
    pub fn sigma_r(&self, region: Rect) -> (f64, f64) {
        let l = region.w.max(region.h) as f64;
        (self.sigma_r_frac * l, self.sigma_r_frac * l)
    }
}

/// A sub-category and its finer-sub-categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subcategory {
    pub name: String,
    pub finer: Vec<String>,
}

/// CAD models backing the continuous-viewpoint potentials: one per
/// finer-sub-category (global finer order) and one merged model per
/// sub-category.
#[derive(Debug, Clone, Default)]
pub struct CadRegistry {
    pub finer: Vec<CadModel>,
    pub merged: Vec<CadModel>,
}

/// Full hierarchy configuration.
#[derive(Debug, Clone)]
pub struct HierarchyConfig {
    /// Number of discrete azimuth bins (m).
    pub azimuth_bins: usize,
    /// Hierarchy depth actually used: 1, 2 or 3.
    pub layers: u8,
    pub subcategories: Vec<Subcategory>,
    pub sample_counts: SampleCounts,
    pub sigmas: SigmaParams,
    pub c_svm: f64,
    pub hog: HogParams,
    pub app_dim: usize,
    pub registry: CadRegistry,
}

impl HierarchyConfig {
    pub fn subcat_count(&self) -> usize {
        self.subcategories.len()
    }

    pub fn finer_count(&self) -> usize {
        self.subcategories.iter().map(|s| s.finer.len()).sum()
    }

    /// Sub-category owning a global finer index.
    pub fn subcat_of_finer(&self, finer: usize) -> Option<usize> {
        let mut base = 0;
        for (s, sub) in self.subcategories.iter().enumerate() {
            if finer < base + sub.finer.len() {
                return Some(s);
            }
            base += sub.finer.len();
        }
        None
    }

    /// Global finer index range of a sub-category.
    pub fn finer_range(&self, subcat: usize) -> core::ops::Range<usize> {
        let mut base = 0;
        for sub in &self.subcategories[..subcat] {
            base += sub.finer.len();
        }
        base..base + self.subcategories[subcat].finer.len()
    }

    pub fn finer_name(&self, finer: usize) -> &str {
        let s = self.subcat_of_finer(finer).expect("finer index in range");
        let local = finer - self.finer_range(s).start;
        &self.subcategories[s].finer[local]
    }

    pub fn finer_index_of(&self, name: &str) -> Option<usize> {
        let mut g = 0;
        for sub in &self.subcategories {
            for f in &sub.finer {
                if f == name {
                    return Some(g);
                }
                g += 1;
            }
        }
        None
    }

    pub fn subcat_index_of(&self, name: &str) -> Option<usize> {
        self.subcategories.iter().position(|s| s.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuth_bins < 2 {
            return Err(Error::InvalidConfig("need at least 2 azimuth bins".into()));
        }
        if !(1..=3).contains(&self.layers) {
            return Err(Error::InvalidConfig("layer count must be 1, 2 or 3".into()));
        }
        if self.layers >= 2 {
            if self.subcategories.is_empty() {
                return Err(Error::InvalidConfig("no sub-categories configured".into()));
            }
            if self.registry.merged.len() != self.subcat_count() {
                return Err(Error::InvalidConfig(
                    "registry needs one merged CAD model per sub-category".into(),
                ));
            }
        }
        if self.layers == 3 {
            for sub in &self.subcategories {
                if sub.finer.is_empty() {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "sub-category {} has no finer-sub-categories",
                        sub.name
                    )));
                }
            }
            if self.registry.finer.len() != self.finer_count() {
                return Err(Error::InvalidConfig(
                    "registry needs one CAD model per finer-sub-category".into(),
                ));
            }
        }
        if self.sample_counts.total() == 0 {
            return Err(Error::InvalidConfig("sample counts must be positive".into()));
        }
        Ok(())
    }

    /// FNV-1a hash over the structural fields (everything that determines the
    /// weight layout and the sampling behavior; CAD geometry excluded).
    pub fn structure_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.azimuth_bins as u64).to_le_bytes());
        eat(&[self.layers]);
        for sub in &self.subcategories {
            eat(sub.name.as_bytes());
            eat(&[0xff]);
            for f in &sub.finer {
                eat(f.as_bytes());
                eat(&[0xfe]);
            }
        }
        for v in [
            self.sample_counts.azimuth as u64,
            self.sample_counts.elevation as u64,
            self.sample_counts.distance as u64,
            self.sample_counts.occlusion as u64,
            self.hog.template as u64,
            self.hog.cell_px as u64,
            self.hog.bins as u64,
            self.app_dim as u64,
        ] {
            eat(&v.to_le_bytes());
        }
        for v in [
            self.sigmas.sigma_a,
            self.sigmas.sigma_e,
            self.sigmas.mu_e,
            self.sigmas.sigma_r_frac,
            self.c_svm,
        ] {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Center angle of azimuth bin `bin` (bin 0 is centered on 0; bins are
/// `2π/m` wide with edges at ±π/m around each center).
pub fn bin_center(bin: usize, m: usize) -> f64 {
    2.0 * PI * bin as f64 / m as f64
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_azimuth(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    if r >= two_pi {
        r = 0.0;
    }
    r
}

/// Discrete azimuth bin of a continuous azimuth.
pub fn azimuth_bin(azimuth: f64, m: usize) -> usize {
    let width = 2.0 * PI / m as f64;
    let shifted = wrap_azimuth(azimuth + width / 2.0);
    ((shifted / width) as usize).min(m - 1)
}

/// Circular distance between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_azimuth(a - b);
    d.min(2.0 * PI - d)
}

/// One joint hypothesis for a proposal region.
///
/// `None` plays the background label `b` of every label set. The continuous
/// viewpoints are filled by inference with each layer's best particle.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelAssignment {
    pub object: bool,
    pub v1: Option<usize>,
    pub v2: Option<usize>,
    pub v3: Option<usize>,
    pub s2: Option<usize>,
    pub s3: Option<usize>,
    pub finer: Option<usize>,
    pub cv2: Option<ContinuousViewpoint>,
    pub cv3: Option<ContinuousViewpoint>,
}

impl LabelAssignment {
    pub fn background() -> Self {
        LabelAssignment {
            object: false,
            v1: None,
            v2: None,
            v3: None,
            s2: None,
            s3: None,
            finer: None,
            cv2: None,
            cv3: None,
        }
    }

    /// Consistent foreground assignment for the configured layer count.
    /// `subcat` is required for 2+ layers; `finer` may be `None` (the
    /// background label of the finest layer).
    pub fn foreground(
        config: &HierarchyConfig,
        v: usize,
        subcat: Option<usize>,
        finer: Option<usize>,
    ) -> Self {
        let mut a = LabelAssignment::background();
        a.object = true;
        a.v1 = Some(v);
        if config.layers >= 2 {
            a.v2 = Some(v);
            a.s2 = subcat;
        }
        if config.layers >= 3 {
            a.v3 = Some(v);
            a.s3 = subcat;
            a.finer = finer;
        }
        a
    }

    /// The finest continuous viewpoint this assignment carries.
    pub fn best_viewpoint(&self) -> Option<&ContinuousViewpoint> {
        self.cv3.as_ref().or(self.cv2.as_ref())
    }
}

/// First violated invariant of a label assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// A background hypothesis carries a non-background label.
    BackgroundPurity,
    /// Discrete viewpoints differ across layers (or exceed the bin count).
    ViewpointConsistency,
    /// Sub-category labels differ between layers 2 and 3.
    SubcategoryConsistency,
    /// Finer label does not belong to the assigned sub-category.
    FinerMembership,
    /// A label is set on a layer above the configured depth.
    LayerTruncation,
    /// A required label of an active layer is missing.
    MissingLabel,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Violation::BackgroundPurity => "background purity",
            Violation::ViewpointConsistency => "viewpoint consistency",
            Violation::SubcategoryConsistency => "subcategory consistency",
            Violation::FinerMembership => "finer membership",
            Violation::LayerTruncation => "layer truncation",
            Violation::MissingLabel => "missing label",
        };
        f.write_str(name)
    }
}

/// Check an assignment against the model invariants; returns the first
/// violation found.
pub fn validate_assignment(
    assignment: &LabelAssignment,
    config: &HierarchyConfig,
) -> core::result::Result<(), Violation> {
    let a = assignment;
    if !a.object {
        if a.v1.is_some()
            || a.v2.is_some()
            || a.v3.is_some()
            || a.s2.is_some()
            || a.s3.is_some()
            || a.finer.is_some()
            || a.cv2.is_some()
            || a.cv3.is_some()
        {
            return Err(Violation::BackgroundPurity);
        }
        return Ok(());
    }
    let v = match a.v1 {
        Some(v) if v < config.azimuth_bins => v,
        Some(_) => return Err(Violation::ViewpointConsistency),
        None => return Err(Violation::MissingLabel),
    };
    if config.layers >= 2 {
        if a.v2 != Some(v) {
            return Err(Violation::ViewpointConsistency);
        }
        match a.s2 {
            Some(s) if s < config.subcat_count() => {}
            _ => return Err(Violation::MissingLabel),
        }
    } else if a.v2.is_some() || a.s2.is_some() || a.cv2.is_some() {
        return Err(Violation::LayerTruncation);
    }
    if config.layers >= 3 {
        if a.v3 != Some(v) {
            return Err(Violation::ViewpointConsistency);
        }
        if a.s3 != a.s2 {
            return Err(Violation::SubcategoryConsistency);
        }
        if let Some(f) = a.finer {
            let s = a.s3.expect("checked above");
            if !config.finer_range(s).contains(&f) {
                return Err(Violation::FinerMembership);
            }
        }
    } else if a.v3.is_some() || a.s3.is_some() || a.finer.is_some() || a.cv3.is_some() {
        return Err(Violation::LayerTruncation);
    }
    Ok(())
}

/// One training example: a region with its ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub image_id: String,
    pub region: Rect,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Background,
    Object {
        v_bin: usize,
        viewpoint: ContinuousViewpoint,
        subcat: usize,
        /// Global finer index.
        finer: usize,
    },
}

impl TrainingExample {
    pub fn is_positive(&self) -> bool {
        matches!(self.truth, GroundTruth::Object { .. })
    }

    /// The ground truth as a label assignment of the configured depth.
    pub fn true_assignment(&self, config: &HierarchyConfig) -> LabelAssignment {
        match &self.truth {
            GroundTruth::Background => LabelAssignment::background(),
            GroundTruth::Object { v_bin, subcat, finer, .. } => LabelAssignment::foreground(
                config,
                *v_bin,
                (config.layers >= 2).then_some(*subcat),
                (config.layers >= 3).then_some(*finer),
            ),
        }
    }
}

/// Named block table of the weight vector.
///
/// Blocks, in order: `det` (scalar), per-layer HOG templates `glb1`..`glb3`
/// (indexed by viewpoint / viewpoint+subcat / viewpoint+finer), per-layer
/// appearance templates `loc1`..`loc3`, the continuous-viewpoint scalars
/// `cnt2` (per subcat) and `cnt3` (per finer), and the frozen `consistency`
/// block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightLayout {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub layers: u8,
    pub hog_dim: usize,
    pub app_dim: usize,
    blocks: Vec<(String, usize, usize)>,
    total: usize,
}

impl WeightLayout {
    pub fn new(config: &HierarchyConfig) -> Self {
        let m = config.azimuth_bins;
        let n = config.subcat_count();
        let p = config.finer_count();
        let hog_dim = config.hog.descriptor_len();
        let app_dim = config.app_dim;
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        let push = |name: &str, len: usize, offset: &mut usize, blocks: &mut Vec<(String, usize, usize)>| {
            blocks.push((String::from(name), *offset, len));
            *offset += len;
        };
        push("det", 1, &mut offset, &mut blocks);
        push("glb1", m * hog_dim, &mut offset, &mut blocks);
        push("loc1", m * app_dim, &mut offset, &mut blocks);
        if config.layers >= 2 {
            push("glb2", m * n * hog_dim, &mut offset, &mut blocks);
            push("loc2", m * n * app_dim, &mut offset, &mut blocks);
            push("cnt2", n, &mut offset, &mut blocks);
        }
        if config.layers >= 3 {
            push("glb3", m * p * hog_dim, &mut offset, &mut blocks);
            push("loc3", m * p * app_dim, &mut offset, &mut blocks);
            push("cnt3", p, &mut offset, &mut blocks);
        }
        // Across-layer consistency weights, fixed at 0 (consistency is
        // enforced by enumerating only consistent assignments).
        push("consistency", 3, &mut offset, &mut blocks);
        WeightLayout { m, n, p, layers: config.layers, hog_dim, app_dim, blocks, total: offset }
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn blocks(&self) -> &[(String, usize, usize)] {
        &self.blocks
    }

    fn block(&self, name: &str) -> (usize, usize) {
        let (_, off, len) = self
            .blocks
            .iter()
            .find(|(n, _, _)| n == name)
            .unwrap_or_else(|| panic!("no block {name} in layout"));
        (*off, *len)
    }

    pub fn det_index(&self) -> usize {
        self.block("det").0
    }

    pub fn glb1(&self, v: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("glb1");
        let start = off + v * self.hog_dim;
        start..start + self.hog_dim
    }

    pub fn loc1(&self, v: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("loc1");
        let start = off + v * self.app_dim;
        start..start + self.app_dim
    }

    pub fn glb2(&self, v: usize, s: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("glb2");
        let start = off + (v * self.n + s) * self.hog_dim;
        start..start + self.hog_dim
    }

    pub fn loc2(&self, v: usize, s: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("loc2");
        let start = off + (v * self.n + s) * self.app_dim;
        start..start + self.app_dim
    }

    pub fn cnt2(&self, s: usize) -> usize {
        self.block("cnt2").0 + s
    }

    pub fn glb3(&self, v: usize, finer: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("glb3");
        let start = off + (v * self.p + finer) * self.hog_dim;
        start..start + self.hog_dim
    }

    pub fn loc3(&self, v: usize, finer: usize) -> core::ops::Range<usize> {
        let (off, _) = self.block("loc3");
        let start = off + (v * self.p + finer) * self.app_dim;
        start..start + self.app_dim
    }

    pub fn cnt3(&self, finer: usize) -> usize {
        self.block("cnt3").0 + finer
    }

    pub fn cnt_ranges(&self) -> Vec<core::ops::Range<usize>> {
        let mut out = Vec::new();
        for name in ["cnt2", "cnt3"] {
            if let Some((_, off, len)) = self.blocks.iter().find(|(n, _, _)| n == name) {
                out.push(*off..*off + *len);
            }
        }
        out
    }
}

/// Flat learned parameter vector tagged with the configuration it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub config_hash: u64,
    pub values: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(layout: &WeightLayout, config_hash: u64) -> Self {
        WeightVector { config_hash, values: vec![0.0; layout.total_len()] }
    }

    pub fn from_values(layout: &WeightLayout, config_hash: u64, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_len(),
                got: values.len(),
                what: "weight vector",
            });
        }
        Ok(WeightVector { config_hash, values })
    }

    /// Copy with the continuous-viewpoint scalar blocks zeroed — the
    /// "discrete model" ablation switch.
    pub fn with_zeroed_cnt(&self, layout: &WeightLayout) -> Self {
        let mut w = self.clone();
        for range in layout.cnt_ranges() {
            for v in &mut w.values[range] {
                *v = 0.0;
            }
        }
        w
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.values.len(), other.len());
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// Precomputed per-region features entering the feature map.
#[derive(Debug, Clone)]
pub struct RegionFeatures {
    pub det: f64,
    pub hog: HogDescriptor,
    pub app: AppearanceVector,
}

/// The φ_cnt scalars of one assignment (already maximized over particles).
#[derive(Debug, Clone, Copy, Default)]
pub struct CntValues {
    pub layer2: Option<f64>,
    pub layer3: Option<f64>,
}

/// Joint feature map ψ(x, y).
///
/// `⟨w, ψ(x, y)⟩` equals the assignment's total energy for every weight
/// vector of the layout; the background assignment maps to the zero vector.
pub fn joint_feature_map(
    layout: &WeightLayout,
    features: &RegionFeatures,
    assignment: &LabelAssignment,
    cnt: &CntValues,
    config: &HierarchyConfig,
) -> Result<Vec<f64>> {
    validate_assignment(assignment, config).map_err(Error::InvalidAssignment)?;
    if features.hog.values.len() != layout.hog_dim {
        return Err(Error::DimensionMismatch {
            expected: layout.hog_dim,
            got: features.hog.values.len(),
            what: "HOG descriptor",
        });
    }
    if features.app.values.len() != layout.app_dim {
        return Err(Error::DimensionMismatch {
            expected: layout.app_dim,
            got: features.app.values.len(),
            what: "appearance vector",
        });
    }
    let mut psi = vec![0.0; layout.total_len()];
    if !assignment.object {
        return Ok(psi);
    }
    let v = assignment.v1.expect("validated foreground");
    psi[layout.det_index()] = features.det;
    psi[layout.glb1(v)].copy_from_slice(&features.hog.values);
    psi[layout.loc1(v)].copy_from_slice(&features.app.values);
    if layout.layers >= 2 {
        let s = assignment.s2.expect("validated layer 2");
        psi[layout.glb2(v, s)].copy_from_slice(&features.hog.values);
        psi[layout.loc2(v, s)].copy_from_slice(&features.app.values);
        let c2 = cnt.layer2.ok_or(Error::MissingCnt { layer: 2, index: s })?;
        psi[layout.cnt2(s)] = c2;
    }
    if layout.layers >= 3 {
        if let Some(f) = assignment.finer {
            psi[layout.glb3(v, f)].copy_from_slice(&features.hog.values);
            psi[layout.loc3(v, f)].copy_from_slice(&features.app.values);
            let c3 = cnt.layer3.ok_or(Error::MissingCnt { layer: 3, index: f })?;
            psi[layout.cnt3(f)] = c3;
        }
    }
    Ok(psi)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny_config(m: usize, layers: u8) -> HierarchyConfig {
        HierarchyConfig {
            azimuth_bins: m,
            layers,
            subcategories: vec![
                Subcategory { name: "alpha".into(), finer: vec!["a0".into(), "a1".into()] },
                Subcategory { name: "beta".into(), finer: vec!["b0".into(), "b1".into()] },
            ],
            sample_counts: SampleCounts::default(),
            sigmas: SigmaParams { sigma_a: 0.1, sigma_e: 0.1, mu_e: 0.3, sigma_r_frac: 0.15 },
            c_svm: 1.0,
            hog: HogParams::default(),
            app_dim: 4,
            registry: CadRegistry::default(),
        }
    }

    #[test]
    fn bin_arithmetic() {
        assert_eq!(azimuth_bin(0.0, 8), 0);
        assert!((bin_center(2, 8) - PI / 2.0).abs() < 1e-12);
        // Just under the edge of bin 0 (edge at π/8).
        assert_eq!(azimuth_bin(PI / 8.0 - 1e-9, 8), 0);
        assert_eq!(azimuth_bin(PI / 8.0 + 1e-9, 8), 1);
        assert_eq!(azimuth_bin(2.0 * PI - 0.01, 8), 0);
        assert!((circular_distance(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn validate_consistent_assignment() {
        let config = tiny_config(8, 3);
        let mut a = LabelAssignment::foreground(&config, 3, Some(1), Some(2));
        assert_eq!(validate_assignment(&a, &config), Ok(()));
        a.finer = None;
        assert_eq!(validate_assignment(&a, &config), Ok(()));
    }

    #[test]
    fn validate_catches_viewpoint_mismatch() {
        let config = tiny_config(8, 3);
        let mut a = LabelAssignment::foreground(&config, 3, Some(0), Some(0));
        a.v2 = Some(4);
        assert_eq!(validate_assignment(&a, &config), Err(Violation::ViewpointConsistency));
    }

    #[test]
    fn validate_catches_background_impurity() {
        let config = tiny_config(8, 3);
        let mut a = LabelAssignment::background();
        a.s2 = Some(0);
        assert_eq!(validate_assignment(&a, &config), Err(Violation::BackgroundPurity));
    }

    #[test]
    fn validate_catches_finer_membership() {
        let config = tiny_config(8, 3);
        // finer 3 belongs to subcat 1, not subcat 0.
        let a = LabelAssignment::foreground(&config, 0, Some(0), Some(3));
        assert_eq!(validate_assignment(&a, &config), Err(Violation::FinerMembership));
    }

    #[test]
    fn layout_lengths_and_disjoint_blocks() {
        let config = tiny_config(8, 3);
        let layout = WeightLayout::new(&config);
        let d = config.hog.descriptor_len();
        let expected = 1
            + 8 * d + 8 * 4
            + 8 * 2 * d + 8 * 2 * 4 + 2
            + 8 * 4 * d + 8 * 4 * 4 + 4
            + 3;
        assert_eq!(layout.total_len(), expected);
        // Feature maps of assignments differing only in v1 overlap nowhere
        // outside the det scalar.
        let features = RegionFeatures {
            det: 0.5,
            hog: HogDescriptor {
                cells_x: 8,
                cells_y: 8,
                bins: 9,
                values: (0..d).map(|i| (i % 7) as f64 / 7.0).collect(),
            },
            app: AppearanceVector { values: vec![1.0, 2.0, 3.0, 4.0], provider_id: "t".into() },
        };
        let cnt = CntValues { layer2: Some(0.3), layer3: Some(0.2) };
        let a = LabelAssignment::foreground(&config, 1, Some(0), Some(0));
        let b = LabelAssignment::foreground(&config, 2, Some(0), Some(0));
        let pa = joint_feature_map(&layout, &features, &a, &cnt, &config).unwrap();
        let pb = joint_feature_map(&layout, &features, &b, &cnt, &config).unwrap();
        let det = layout.det_index();
        for i in 0..pa.len() {
            if i == det || i == layout.cnt2(0) || i == layout.cnt3(0) {
                continue;
            }
            assert!(
                !(pa[i] != 0.0 && pb[i] != 0.0),
                "blocks overlap at {i}"
            );
        }
    }

    #[test]
    fn background_maps_to_zero_vector() {
        let config = tiny_config(4, 3);
        let layout = WeightLayout::new(&config);
        let features = RegionFeatures {
            det: 1.0,
            hog: HogDescriptor {
                cells_x: 8,
                cells_y: 8,
                bins: 9,
                values: vec![0.1; config.hog.descriptor_len()],
            },
            app: AppearanceVector { values: vec![1.0; 4], provider_id: "t".into() },
        };
        let psi = joint_feature_map(
            &layout,
            &features,
            &LabelAssignment::background(),
            &CntValues::default(),
            &config,
        )
        .unwrap();
        assert!(psi.iter().all(|&x| x == 0.0));
    }
}
