//! Evaluation protocols: joint detection average precision with viewpoint /
//! sub-category / finer criteria, continuous-pose RMSE, projection-mask
//! segmentation IoU, and sub-category confusion matrices.
//!
//! Matching is greedy at IoU > 0.5 with one detection per ground truth; a
//! matched detection is a true positive only when all label components the
//! criterion requires are also correct, and duplicates of an already-matched
//! ground truth count as false positives. Viewpoint correctness discretizes
//! the estimated continuous azimuth into the criterion's bin count.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{render_silhouette, CadModel, Camera, CameraPose, SilhouetteMask};
use crate::image::Rect;
use crate::inference::Detection;
use crate::model::{azimuth_bin, bin_center, circular_distance, ContinuousViewpoint, HierarchyConfig};
use crate::{Error, Result};

/// What a matched detection must get right to count as a true positive (the
/// bounding box is always required).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchCriterion {
    /// Require the azimuth, discretized into this many bins, to match.
    pub viewpoint_bins: Option<usize>,
    pub require_subcat: bool,
    pub require_finer: bool,
}

impl MatchCriterion {
    pub fn bounding_box() -> Self {
        MatchCriterion { viewpoint_bins: None, require_subcat: false, require_finer: false }
    }

    pub fn viewpoint(bins: usize) -> Self {
        MatchCriterion { viewpoint_bins: Some(bins), require_subcat: false, require_finer: false }
    }

    pub fn subcat() -> Self {
        MatchCriterion { viewpoint_bins: None, require_subcat: true, require_finer: false }
    }

    pub fn subcat_viewpoint(bins: usize) -> Self {
        MatchCriterion { viewpoint_bins: Some(bins), require_subcat: true, require_finer: false }
    }

    pub fn all(bins: usize) -> Self {
        MatchCriterion { viewpoint_bins: Some(bins), require_subcat: true, require_finer: true }
    }

    pub fn labels_correct(&self, det: &DetectionRecord, gt: &GroundTruthBox) -> bool {
        if let Some(bins) = self.viewpoint_bins {
            if azimuth_bin(det.azimuth, bins) != azimuth_bin(gt.azimuth, bins) {
                return false;
            }
        }
        if self.require_subcat && det.subcat != Some(gt.subcat) {
            return false;
        }
        if self.require_finer && det.finer != Some(gt.finer) {
            return false;
        }
        true
    }
}

/// A detection as the evaluator sees it (the detections-file record).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: String,
    pub region: Rect,
    pub energy: f64,
    pub v_bin: usize,
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub occ: (f64, f64),
    pub subcat: Option<usize>,
    pub finer: Option<usize>,
}

impl DetectionRecord {
    /// Flatten an inference result; `None` for background results. Layers
    /// without a continuous estimate fall back to the anchored discrete
    /// hypothesis (bin center, mean elevation, `fallback_distance`).
    pub fn from_detection(
        det: &Detection,
        config: &HierarchyConfig,
        fallback_distance: f64,
    ) -> Option<Self> {
        let a = &det.assignment;
        if !a.object {
            return None;
        }
        let v = a.v1?;
        let cv = a.best_viewpoint().copied().unwrap_or(ContinuousViewpoint {
            azimuth: bin_center(v, config.azimuth_bins),
            elevation: config.sigmas.mu_e,
            distance: fallback_distance,
            occ: (0.0, 0.0),
        });
        Some(DetectionRecord {
            image_id: det.image_id.clone(),
            region: det.region,
            energy: det.energy,
            v_bin: v,
            azimuth: cv.azimuth,
            elevation: cv.elevation,
            distance: cv.distance,
            occ: cv.occ,
            subcat: a.s2,
            finer: a.finer,
        })
    }
}

/// Ground-truth annotation as the evaluator sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub image_id: String,
    pub region: Rect,
    pub v_bin: usize,
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub occ: (f64, f64),
    pub subcat: usize,
    pub finer: usize,
}

/// Precision/recall curve with its all-point-interpolated average precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PrAp {
    /// (recall, precision) after each detection in rank order.
    pub points: Vec<(f64, f64)>,
    pub average_precision: f64,
}

fn rank_order(dets: &[DetectionRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .energy
            .partial_cmp(&dets[a].energy)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Greedy box matching at IoU > 0.5 in rank order: one detection per ground
/// truth, best IoU first. Returns (detection index, ground-truth index)
/// pairs.
pub fn greedy_box_matches(
    dets: &[DetectionRecord],
    gts: &[GroundTruthBox],
) -> Vec<(usize, usize)> {
    let mut matched = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for &di in &rank_order(dets) {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if matched[gi] || gt.image_id != det.image_id {
                continue;
            }
            let iou = det.region.iou(&gt.region);
            if iou > 0.5 && best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            matched[gi] = true;
            pairs.push((di, gi));
        }
    }
    pairs
}

/// Average precision under a matching criterion. `None` when there is no
/// ground truth (AP undefined).
pub fn evaluate_ap(
    dets: &[DetectionRecord],
    gts: &[GroundTruthBox],
    criterion: &MatchCriterion,
) -> Option<PrAp> {
    if gts.is_empty() {
        return None;
    }
    let order = rank_order(dets);
    let mut matched = vec![false; gts.len()];
    let npos = gts.len() as f64;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut points = Vec::with_capacity(dets.len());
    for &di in &order {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if matched[gi] || gt.image_id != det.image_id {
                continue;
            }
            let iou = det.region.iou(&gt.region);
            if iou > 0.5 && best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, _)) => {
                matched[gi] = true;
                if criterion.labels_correct(det, &gts[gi]) {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            None => fp += 1,
        }
        points.push((tp as f64 / npos, tp as f64 / (tp + fp) as f64));
    }
    let mut ap = 0.0;
    let mut max_precision = 0.0;
    for i in (0..points.len()).rev() {
        max_precision = max_precision.max(points[i].1);
        let prev_recall = if i == 0 { 0.0 } else { points[i - 1].0 };
        ap += (points[i].0 - prev_recall) * max_precision;
    }
    Some(PrAp { points, average_precision: ap })
}

/// Root-mean-square viewpoint errors over matched (predicted, true) pairs.
/// Azimuth and elevation are reported in degrees; the azimuth error is the
/// circular difference in `[0°, 180°]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRmse {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
}

pub fn pose_rmse(pairs: &[(ContinuousViewpoint, ContinuousViewpoint)]) -> Result<PoseRmse> {
    if pairs.is_empty() {
        return Err(Error::InvalidTrainingSet("pose RMSE needs at least one pair".into()));
    }
    let n = pairs.len() as f64;
    let mut az = 0.0;
    let mut el = 0.0;
    let mut d = 0.0;
    for (pred, truth) in pairs {
        let da = circular_distance(pred.azimuth, truth.azimuth).to_degrees();
        let de = (pred.elevation - truth.elevation).to_degrees();
        let dd = pred.distance - truth.distance;
        az += da * da;
        el += de * de;
        d += dd * dd;
    }
    Ok(PoseRmse {
        azimuth_deg: (az / n).sqrt(),
        elevation_deg: (el / n).sqrt(),
        distance: (d / n).sqrt(),
    })
}

/// IoU of two masks placed at pixel offsets in a common frame, counting only
/// in-frame pixels.
pub fn placed_mask_iou(
    a: &SilhouetteMask,
    a_pos: (i32, i32),
    b: &SilhouetteMask,
    b_pos: (i32, i32),
    frame_w: u32,
    frame_h: u32,
) -> f64 {
    let bit_at = |m: &SilhouetteMask, pos: (i32, i32), x: i64, y: i64| -> bool {
        let mx = x - pos.0 as i64;
        let my = y - pos.1 as i64;
        mx >= 0 && my >= 0 && mx < m.width() as i64 && my < m.height() as i64
            && m.bit(mx as u32, my as u32)
    };
    let mut inter = 0u64;
    let mut union = 0u64;
    for y in 0..frame_h as i64 {
        for x in 0..frame_w as i64 {
            let pa = bit_at(a, a_pos, x, y);
            let pb = bit_at(b, b_pos, x, y);
            if pa && pb {
                inter += 1;
            }
            if pa || pb {
                union += 1;
            }
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Ground truth source for segmentation scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentationMode {
    /// Render the ground-truth CAD at the ground-truth viewpoint.
    CadAlignment,
    /// Compare against a provided full-image pixel mask.
    Segmentation2d,
}

fn render_in_region(
    cad: &CadModel,
    azimuth: f64,
    elevation: f64,
    distance: f64,
    occ: (f64, f64),
    region: Rect,
    image_w: u32,
    image_h: u32,
) -> Result<SilhouetteMask> {
    let pose = CameraPose::new(azimuth, elevation, distance)?;
    let camera = Camera::with_focal_of(image_w, image_h, region.w, region.h);
    render_silhouette(cad, &pose, &camera, occ)
}

/// Projection-mask IoU of a true-positive detection.
///
/// The estimated finer-sub-category CAD is rendered at the estimated
/// continuous viewpoint in the detection box; the reference is either the
/// ground-truth CAD rendered at the ground-truth viewpoint in its box
/// (CAD-alignment mode) or a provided segmentation mask.
pub fn segmentation_iou(
    det: &DetectionRecord,
    gt: &GroundTruthBox,
    finer_models: &[CadModel],
    image_w: u32,
    image_h: u32,
    mode: SegmentationMode,
    gt_mask: Option<&SilhouetteMask>,
) -> Result<f64> {
    let finer = det
        .finer
        .ok_or_else(|| Error::MissingAsset("finer-sub-category estimate of the detection".into()))?;
    let est_cad = finer_models
        .get(finer)
        .ok_or_else(|| Error::MissingAsset("CAD model of the estimated finer-sub-category".into()))?;
    let est = render_in_region(
        est_cad,
        det.azimuth,
        det.elevation,
        det.distance,
        det.occ,
        det.region,
        image_w,
        image_h,
    )?;
    match mode {
        SegmentationMode::CadAlignment => {
            let gt_cad = finer_models.get(gt.finer).ok_or_else(|| {
                Error::MissingAsset("CAD model of the ground-truth finer-sub-category".into())
            })?;
            let reference = render_in_region(
                gt_cad,
                gt.azimuth,
                gt.elevation,
                gt.distance,
                gt.occ,
                gt.region,
                image_w,
                image_h,
            )?;
            Ok(placed_mask_iou(
                &est,
                (det.region.x, det.region.y),
                &reference,
                (gt.region.x, gt.region.y),
                image_w,
                image_h,
            ))
        }
        SegmentationMode::Segmentation2d => {
            let mask = gt_mask
                .ok_or_else(|| Error::MissingAsset(alloc::format!("2D mask for {}", gt.image_id)))?;
            Ok(placed_mask_iou(&est, (det.region.x, det.region.y), mask, (0, 0), image_w, image_h))
        }
    }
}

/// Sub-category confusion counts over matched boxes: rows are true labels,
/// columns predicted.
pub fn confusion_matrix(pairs: &[(usize, usize)], n: usize) -> Vec<Vec<usize>> {
    let mut matrix = vec![vec![0usize; n]; n];
    for &(true_s, pred_s) in pairs {
        if true_s < n && pred_s < n {
            matrix[true_s][pred_s] += 1;
        }
    }
    matrix
}
