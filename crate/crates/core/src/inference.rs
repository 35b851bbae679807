//! MAP inference by exhaustive search over the consistent assignments.
//!
//! The discrete space is small: `m` azimuth bins times, per sub-category, the
//! finer labels plus the finest-layer background, plus the single background
//! hypothesis at energy 0. The continuous viewpoints enter through the φ_cnt
//! tables of the bundle, which are already maximized over each bin's particle
//! set. Enumeration order is fixed (viewpoint, then sub-category, then finer,
//! with the finest-layer background first); ties keep the earliest candidate,
//! so all-zero weights return the background hypothesis.

use alloc::string::String;
use alloc::vec::Vec;

use crate::features::AppearanceProvider;
use crate::image::{GrayImage, Rect};
use crate::learning::LossSpec;
use crate::model::{
    GroundTruth, HierarchyConfig, LabelAssignment, TrainingExample, WeightLayout, WeightVector,
};
use crate::potentials::{
    compute_bundle, total_energy, DetectorScore, EnergyBreakdown, ParticleMode, PotentialBundle,
    RenderCache,
};
use crate::sampling::DistanceReference;
use crate::Result;

/// Scored inference result for one region.
#[derive(Debug, Clone)]
pub struct Detection {
    pub image_id: String,
    pub region: Rect,
    pub assignment: LabelAssignment,
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
}

/// All consistent foreground label combinations of the configured depth, in
/// the fixed enumeration order.
pub fn enumerate_labels(config: &HierarchyConfig) -> Vec<(usize, Option<usize>, Option<usize>)> {
    let mut out = Vec::new();
    for v in 0..config.azimuth_bins {
        match config.layers {
            1 => out.push((v, None, None)),
            2 => {
                for s in 0..config.subcat_count() {
                    out.push((v, Some(s), None));
                }
            }
            _ => {
                for s in 0..config.subcat_count() {
                    out.push((v, Some(s), None));
                    for f in config.finer_range(s) {
                        out.push((v, Some(s), Some(f)));
                    }
                }
            }
        }
    }
    out
}

/// Task loss Δ(truth, candidate): each layer contributes its own loss when
/// its label is wrong. The mid-layer loss is Δ²_base divided by the training
/// frequency of the true sub-category (the predicted one's frequency for
/// background truths).
pub fn assignment_loss(
    truth: &GroundTruth,
    candidate: &LabelAssignment,
    losses: &LossSpec,
    subcat_counts: &[usize],
    config: &HierarchyConfig,
) -> f64 {
    let delta2 = |s: usize| {
        let k = subcat_counts.get(s).copied().unwrap_or(1).max(1);
        losses.delta2_base / k as f64
    };
    match truth {
        GroundTruth::Background => {
            if !candidate.object {
                return 0.0;
            }
            let mut loss = losses.delta1;
            if config.layers >= 2 {
                if let Some(s) = candidate.s2 {
                    loss += delta2(s);
                }
            }
            if config.layers >= 3 {
                loss += losses.delta3;
            }
            loss
        }
        GroundTruth::Object { v_bin, subcat, finer, .. } => {
            let mut loss = 0.0;
            if candidate.v1 != Some(*v_bin) {
                loss += losses.delta1;
            }
            if config.layers >= 2 && candidate.s2 != Some(*subcat) {
                loss += delta2(*subcat);
            }
            if config.layers >= 3 && candidate.finer != Some(*finer) {
                loss += losses.delta3;
            }
            loss
        }
    }
}

/// Result of loss-augmented inference for one example.
#[derive(Debug, Clone)]
pub struct LossAugmented {
    pub assignment: LabelAssignment,
    /// `E + Δ` of the winner.
    pub augmented_score: f64,
    pub energy: f64,
    pub loss: f64,
}

/// Inference engine: configuration, weights, and the pluggable feature
/// sources. Immutable during inference; the render cache is passed per call.
pub struct Inferencer<'a> {
    pub config: &'a HierarchyConfig,
    pub layout: &'a WeightLayout,
    pub weights: &'a WeightVector,
    pub refs: &'a DistanceReference,
    pub provider: &'a dyn AppearanceProvider,
    pub detector: &'a dyn DetectorScore,
    pub seed: u64,
    pub particle_mode: ParticleMode,
}

/// Argmax-energy assignment over background plus all consistent foreground
/// hypotheses of a precomputed bundle.
pub fn infer_from_bundle(
    config: &HierarchyConfig,
    layout: &WeightLayout,
    weights: &WeightVector,
    image_id: &str,
    region: Rect,
    bundle: &PotentialBundle,
) -> Result<Detection> {
    let mut best_assignment = LabelAssignment::background();
    let mut best_breakdown = EnergyBreakdown::zero();
    let mut best_energy = 0.0f64;
    for (v, s, f) in enumerate_labels(config) {
        let assignment = LabelAssignment::foreground(config, v, s, f);
        let breakdown = total_energy(bundle, &assignment, layout, weights, config)?;
        if breakdown.total > best_energy {
            best_energy = breakdown.total;
            best_assignment = assignment;
            best_breakdown = breakdown;
        }
    }
    if best_assignment.object {
        best_assignment.cv2 = bundle.best_particle(&best_assignment, 2);
        best_assignment.cv3 = bundle.best_particle(&best_assignment, 3);
    }
    Ok(Detection {
        image_id: String::from(image_id),
        region,
        assignment: best_assignment,
        energy: best_energy,
        breakdown: best_breakdown,
    })
}

/// Most violating constraint of one example: argmax of energy plus task loss.
pub fn loss_augmented_from_bundle(
    config: &HierarchyConfig,
    layout: &WeightLayout,
    weights: &WeightVector,
    example: &TrainingExample,
    bundle: &PotentialBundle,
    losses: &LossSpec,
    subcat_counts: &[usize],
) -> Result<LossAugmented> {
    let background_loss = assignment_loss(
        &example.truth,
        &LabelAssignment::background(),
        losses,
        subcat_counts,
        config,
    );
    let mut best = LossAugmented {
        assignment: LabelAssignment::background(),
        augmented_score: background_loss,
        energy: 0.0,
        loss: background_loss,
    };
    for (v, s, f) in enumerate_labels(config) {
        let assignment = LabelAssignment::foreground(config, v, s, f);
        let energy = total_energy(bundle, &assignment, layout, weights, config)?.total;
        let loss = assignment_loss(&example.truth, &assignment, losses, subcat_counts, config);
        if energy + loss > best.augmented_score {
            best = LossAugmented { assignment, augmented_score: energy + loss, energy, loss };
        }
    }
    Ok(best)
}

impl<'a> Inferencer<'a> {
    pub fn bundle(
        &self,
        image: &GrayImage,
        image_id: &str,
        region: Rect,
        cache: &mut RenderCache,
    ) -> Result<PotentialBundle> {
        compute_bundle(
            image,
            image_id,
            region,
            self.config,
            self.refs,
            self.provider,
            self.detector,
            self.seed,
            self.particle_mode,
            cache,
        )
    }

    /// MAP inference for one region end to end.
    pub fn infer(
        &self,
        image: &GrayImage,
        image_id: &str,
        region: Rect,
        cache: &mut RenderCache,
    ) -> Result<Detection> {
        let bundle = self.bundle(image, image_id, region, cache)?;
        infer_from_bundle(self.config, self.layout, self.weights, image_id, region, &bundle)
    }

    /// Per-image driver: infer every proposal, drop background results, and
    /// apply greedy non-maximum suppression at the IoU threshold.
    pub fn detect_image(
        &self,
        image: &GrayImage,
        image_id: &str,
        proposals: &[Rect],
        nms_iou: f64,
        cache: &mut RenderCache,
    ) -> Result<Vec<Detection>> {
        let mut detections = Vec::new();
        for &region in proposals {
            let det = self.infer(image, image_id, region, cache)?;
            if det.assignment.object {
                detections.push(det);
            }
        }
        Ok(greedy_nms(detections, nms_iou))
    }
}

/// Greedy NMS: sort by energy descending (stable), keep a detection unless it
/// overlaps an already-kept one with IoU above the threshold.
pub fn greedy_nms(mut detections: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    detections.sort_by(|a, b| b.energy.partial_cmp(&a.energy).unwrap_or(core::cmp::Ordering::Equal));
    let mut kept: Vec<Detection> = Vec::new();
    for det in detections {
        if kept.iter().all(|k| k.region.iou(&det.region) <= iou_threshold) {
            kept.push(det);
        }
    }
    kept
}
