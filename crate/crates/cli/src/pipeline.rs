//! End-to-end drivers shared by the CLI and the acceptance suite:
//! dataset writing/loading, model training, batch inference, and evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use hierdet_core::dataset::DatasetManifest;
use hierdet_core::eval::{
    evaluate_ap, greedy_box_matches, pose_rmse, segmentation_iou, confusion_matrix,
    DetectionRecord, GroundTruthBox, MatchCriterion, PoseRmse, SegmentationMode,
};
use hierdet_core::features::{AppearanceProvider, FilterBankProvider, HogParams, PrecomputedProvider};
use hierdet_core::geometry::{merge_cad_models, normalize_mesh, SilhouetteMask};
use hierdet_core::image::GrayImage;
use hierdet_core::inference::Inferencer;
use hierdet_core::learning::{
    prepare_example, train_detector, train_ssvm, LogisticModel, LossSpec, TrainOptions,
};
use hierdet_core::model::{
    CadRegistry, ContinuousViewpoint, GroundTruth, HierarchyConfig, SampleCounts, TrainingExample,
    WeightLayout,
};
use hierdet_core::potentials::{DetectorScore, ParticleMode, PrecomputedDetector, RenderCache};
use hierdet_core::sampling::{default_sigmas, DistanceReference};
use hierdet_core::synth::SynthDataset;

use crate::formats::{detections, manifest, obj, pgm, weights::StoredModel};

/// Voxel resolution and merge fraction of the coarse sub-category models.
pub const MERGE_RESOLUTION: u32 = 32;
pub const MERGE_FRACTION: f64 = 0.5;

/// Negatives mined per image must overlap every ground truth below this IoU.
pub const NEGATIVE_IOU: f64 = 0.3;

/// Write a generated dataset tree (`manifest.txt`, `images/`, `masks/`,
/// `cads/`) and return the manifest path.
pub fn write_dataset(dataset: &SynthDataset, dir: &Path) -> Result<PathBuf> {
    for sub in ["images", "masks", "cads"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    for (id, image) in &dataset.images {
        pgm::write_gray(&dir.join("images").join(format!("{id}.pgm")), image)?;
    }
    for (id, mask) in &dataset.masks {
        pgm::write_mask(&dir.join("masks").join(format!("{id}.pgm")), mask)?;
    }
    for model in &dataset.library.finer_models {
        obj::write_obj(&dir.join("cads").join(format!("{}.obj", model.id)), model)?;
    }
    let path = dir.join("manifest.txt");
    manifest::save_manifest(&path, &dataset.manifest)?;
    Ok(path)
}

/// A dataset loaded from disk with its images resident in memory.
pub struct LoadedDataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub images: BTreeMap<String, GrayImage>,
}

impl LoadedDataset {
    pub fn image(&self, id: &str) -> Result<&GrayImage> {
        self.images.get(id).with_context(|| format!("image {id} not loaded"))
    }

    pub fn mask(&self, image_id: &str) -> Result<Option<SilhouetteMask>> {
        match self.manifest.masks.iter().find(|m| m.image_id == image_id) {
            Some(rec) => Ok(Some(pgm::read_mask(&self.root.join(&rec.path))?)),
            None => Ok(None),
        }
    }
}

pub fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset> {
    let manifest = manifest::load_manifest(manifest_path)?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut images = BTreeMap::new();
    for rec in &manifest.images {
        let image = pgm::read_gray(&root.join(&rec.path))?;
        if image.width() != rec.width || image.height() != rec.height {
            bail!(
                "image {} is {}x{}, manifest says {}x{}",
                rec.id,
                image.width(),
                image.height(),
                rec.width,
                rec.height
            );
        }
        images.insert(rec.id.clone(), image);
    }
    Ok(LoadedDataset { root, manifest, images })
}

/// Load the finer CAD models in the config's global order, normalize them,
/// and build the merged per-sub-category models.
pub fn load_registry(root: &Path, m: &DatasetManifest) -> Result<CadRegistry> {
    let subcats = m.subcategories();
    let mut finer = Vec::new();
    let mut merged = Vec::new();
    for sub in &subcats {
        let mut members = Vec::new();
        for fname in &sub.finer {
            let rec = m
                .cads
                .iter()
                .find(|c| &c.finer_id == fname)
                .with_context(|| format!("no CAD record for {fname}"))?;
            let model = normalize_mesh(&obj::read_obj(&root.join(&rec.path), fname)?)?;
            members.push(model.clone());
            finer.push(model);
        }
        merged.push(normalize_mesh(&merge_cad_models(&members, MERGE_RESOLUTION, MERGE_FRACTION)?)?);
    }
    Ok(CadRegistry { finer, merged })
}

/// Build the hierarchy configuration for a dataset: sub-categories and CAD
/// registry from the manifest, sampling statistics from the annotations.
pub fn build_config(
    dataset: &LoadedDataset,
    layers: u8,
    azimuth_bins: usize,
    c_svm: f64,
    app_dim: usize,
) -> Result<HierarchyConfig> {
    let elevations: Vec<f64> = dataset
        .manifest
        .annotations
        .iter()
        .filter_map(|a| a.object.as_ref().map(|o| o.elevation))
        .collect();
    let sigmas = default_sigmas(azimuth_bins, &elevations)?;
    let registry = load_registry(&dataset.root, &dataset.manifest)?;
    let config = HierarchyConfig {
        azimuth_bins,
        layers,
        subcategories: dataset.manifest.subcategories(),
        sample_counts: SampleCounts::default(),
        sigmas,
        c_svm,
        hog: HogParams::default(),
        app_dim,
        registry,
    };
    config.validate()?;
    Ok(config)
}

/// Attach a dataset's CAD registry to a stored model's configuration,
/// verifying that the label spaces agree.
pub fn attach_registry(model: &mut StoredModel, dataset: &LoadedDataset) -> Result<()> {
    let subcats = dataset.manifest.subcategories();
    if model.config.layers >= 2 && subcats != model.config.subcategories {
        bail!("dataset sub-categories do not match the trained model's");
    }
    model.config.registry = load_registry(&dataset.root, &dataset.manifest)?;
    model.config.validate()?;
    Ok(())
}

/// Distance-sampler references from the positive annotations.
pub fn distance_references(manifest: &DatasetManifest) -> Result<DistanceReference> {
    let mut refs = DistanceReference::new();
    for ann in &manifest.annotations {
        if let Some(obj) = &ann.object {
            refs.push(ann.region.w as f64, ann.region.h as f64, obj.distance)?;
        }
    }
    Ok(refs)
}

/// Negative training examples: proposals overlapping every ground truth of
/// their image below [`NEGATIVE_IOU`], capped per image.
pub fn mine_negatives(manifest: &DatasetManifest, per_image: usize) -> Vec<TrainingExample> {
    let mut out = Vec::new();
    for img in &manifest.images {
        let gts: Vec<_> = manifest
            .annotations_for(&img.id)
            .into_iter()
            .filter(|a| a.object.is_some())
            .map(|a| a.region)
            .collect();
        let mut taken = 0;
        for prop in manifest.proposals_for(&img.id) {
            if taken >= per_image {
                break;
            }
            if gts.iter().all(|gt| prop.iou(gt) < NEGATIVE_IOU) {
                out.push(TrainingExample {
                    image_id: img.id.clone(),
                    region: prop,
                    truth: GroundTruth::Background,
                });
                taken += 1;
            }
        }
    }
    out
}

enum Provider {
    Builtin(FilterBankProvider),
    File(PrecomputedProvider),
}

impl Provider {
    fn as_dyn(&self) -> &dyn AppearanceProvider {
        match self {
            Provider::Builtin(p) => p,
            Provider::File(p) => p,
        }
    }
}

/// The appearance provider for a run: the built-in filter bank, or a
/// precomputed-feature file.
pub fn make_provider(features_file: Option<&Path>) -> Result<(&'static str, ProviderHandle)> {
    match features_file {
        None => Ok(("filter-bank", ProviderHandle(Provider::Builtin(FilterBankProvider::new())))),
        Some(path) => Ok((
            "precomputed",
            ProviderHandle(Provider::File(crate::formats::features::load_feature_provider(
                path,
                "precomputed",
            )?)),
        )),
    }
}

pub struct ProviderHandle(Provider);

impl ProviderHandle {
    pub fn as_dyn(&self) -> &dyn AppearanceProvider {
        self.0.as_dyn()
    }

    pub fn dim(&self) -> usize {
        self.0.as_dyn().dim()
    }
}

enum Detector {
    Logistic(LogisticModel),
    File(PrecomputedDetector),
}

pub struct DetectorHandle(Detector);

impl DetectorHandle {
    pub fn logistic(model: LogisticModel) -> Self {
        DetectorHandle(Detector::Logistic(model))
    }

    pub fn file(map: PrecomputedDetector) -> Self {
        DetectorHandle(Detector::File(map))
    }

    pub fn as_dyn(&self) -> &dyn DetectorScore {
        match &self.0 {
            Detector::Logistic(m) => m,
            Detector::File(f) => f,
        }
    }
}

pub struct TrainParams {
    pub layers: u8,
    pub azimuth_bins: usize,
    pub c_svm: f64,
    pub losses: LossSpec,
    pub options: TrainOptions,
    pub negatives_per_image: usize,
    pub detector_lambda: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            layers: 3,
            azimuth_bins: 8,
            c_svm: 1.0,
            losses: LossSpec::default(),
            options: TrainOptions::default(),
            negatives_per_image: 2,
            detector_lambda: 0.01,
            seed: 7,
            workers: 0,
        }
    }
}

pub struct TrainArtifacts {
    pub model: StoredModel,
    pub dual_trace: Vec<f64>,
    pub iterations: usize,
    /// Final slack of the working-set QP.
    pub xi: f64,
    pub positives: usize,
    pub negatives: usize,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    Ok(builder.build()?)
}

/// Full training pipeline: mine negatives, train the detector, precompute
/// potential bundles, and run the cutting-plane SSVM.
pub fn train(
    dataset: &LoadedDataset,
    params: &TrainParams,
    features_file: Option<&Path>,
    detector_scores: Option<&Path>,
) -> Result<TrainArtifacts> {
    let (_, provider) = make_provider(features_file)?;
    let config = build_config(dataset, params.layers, params.azimuth_bins, params.c_svm, provider.dim())?;
    let layout = WeightLayout::new(&config);
    let refs = distance_references(&dataset.manifest)?;
    let positives = dataset.manifest.training_examples(&config)?;
    let negatives = mine_negatives(&dataset.manifest, params.negatives_per_image);
    let n_pos = positives.iter().filter(|e| e.is_positive()).count();
    let n_neg = negatives.len() + positives.iter().filter(|e| !e.is_positive()).count();
    if n_pos == 0 || n_neg == 0 {
        bail!("training needs at least one positive and one negative example (have {n_pos}/{n_neg})");
    }
    let mut examples = positives;
    examples.extend(negatives);

    // Appearance features for the standalone detector.
    let feats: Vec<(bool, Vec<f64>)> = examples
        .iter()
        .map(|ex| -> Result<(bool, Vec<f64>)> {
            let image = dataset.image(&ex.image_id)?;
            let app = provider.as_dyn().compute(image, &ex.image_id, ex.region)?;
            Ok((ex.is_positive(), app.values))
        })
        .collect::<Result<_>>()?;
    let detector = match detector_scores {
        Some(path) => DetectorHandle::file(crate::formats::features::load_detector_scores(path)?),
        None => {
            let pos: Vec<Vec<f64>> =
                feats.iter().filter(|(p, _)| *p).map(|(_, v)| v.clone()).collect();
            let neg: Vec<Vec<f64>> =
                feats.iter().filter(|(p, _)| !*p).map(|(_, v)| v.clone()).collect();
            DetectorHandle::logistic(train_detector(&pos, &neg, params.detector_lambda, 1e-6, 5000)?)
        }
    };

    // Bundles are weight-independent; compute them once, in parallel.
    let prepared = pool(params.workers)?.install(|| {
        examples
            .par_iter()
            .map(|ex| {
                let image = dataset.image(&ex.image_id)?;
                let mut cache = RenderCache::default();
                Ok(prepare_example(
                    ex.clone(),
                    image,
                    &config,
                    &layout,
                    &refs,
                    provider.as_dyn(),
                    detector.as_dyn(),
                    params.seed,
                    &mut cache,
                )?)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let outcome = train_ssvm(&config, &layout, &prepared, &params.losses, &params.options)?;
    let logistic = match detector.0 {
        Detector::Logistic(m) => m,
        // File-backed scores are an external input, not part of the model;
        // store a zero detector so the weight file stays self-contained.
        Detector::File(_) => LogisticModel { weights: vec![0.0; provider.dim()], bias: 0.0 },
    };
    Ok(TrainArtifacts {
        model: StoredModel {
            config,
            weights: outcome.weights,
            detector: logistic,
            refs,
            converged: outcome.state.converged,
        },
        dual_trace: outcome.state.dual_trace,
        iterations: outcome.state.iterations,
        xi: outcome.state.xi,
        positives: n_pos,
        negatives: n_neg,
    })
}

pub struct InferParams {
    pub seed: u64,
    pub nms_iou: f64,
    pub discrete: bool,
    pub workers: usize,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams { seed: 7, nms_iou: 0.5, discrete: false, workers: 0 }
    }
}

/// Run inference over every image's proposals; returns detection records in
/// manifest image order, energy-descending within an image.
pub fn infer_dataset(
    dataset: &LoadedDataset,
    model: &StoredModel,
    params: &InferParams,
    features_file: Option<&Path>,
    detector_scores: Option<&Path>,
) -> Result<Vec<DetectionRecord>> {
    let (_, provider) = make_provider(features_file)?;
    if provider.dim() != model.config.app_dim {
        bail!(
            "appearance dimension {} does not match the model's {}",
            provider.dim(),
            model.config.app_dim
        );
    }
    let detector = match detector_scores {
        Some(path) => DetectorHandle::file(crate::formats::features::load_detector_scores(path)?),
        None => DetectorHandle::logistic(model.detector.clone()),
    };
    let layout = WeightLayout::new(&model.config);
    let weights = if params.discrete {
        model.weights.with_zeroed_cnt(&layout)
    } else {
        model.weights.clone()
    };
    let mode = if params.discrete { ParticleMode::AnchorOnly } else { ParticleMode::Full };
    let image_ids: Vec<String> = dataset.manifest.images.iter().map(|r| r.id.clone()).collect();
    let per_image: Vec<Vec<DetectionRecord>> = pool(params.workers)?.install(|| {
        image_ids
            .par_iter()
            .map(|id| -> Result<Vec<DetectionRecord>> {
                let proposals = dataset.manifest.proposals_for(id);
                if proposals.is_empty() {
                    return Ok(Vec::new());
                }
                let image = dataset.image(id)?;
                let engine = Inferencer {
                    config: &model.config,
                    layout: &layout,
                    weights: &weights,
                    refs: &model.refs,
                    provider: provider.as_dyn(),
                    detector: detector.as_dyn(),
                    seed: params.seed,
                    particle_mode: mode,
                };
                let mut cache = RenderCache::default();
                let dets = engine.detect_image(image, id, &proposals, params.nms_iou, &mut cache)?;
                dets.iter()
                    .map(|d| {
                        let fallback = model.refs.mode_distance(d.region)?;
                        DetectionRecord::from_detection(d, &model.config, fallback)
                            .context("foreground detection flattened to a record")
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_image.into_iter().flatten().collect())
}

/// One evaluation column: criterion name and its AP (absent without ground
/// truth).
pub type ApColumn = (String, Option<f64>);

pub struct EvalOutcome {
    pub ap_columns: Vec<ApColumn>,
    pub vp_sweep: Vec<(usize, Option<f64>)>,
    pub pose_rmse: Option<PoseRmse>,
    pub mean_iou_cad: Option<f64>,
    pub mean_iou_2d: Option<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub matched: usize,
    pub detections: usize,
    pub ground_truths: usize,
    /// (recall, precision) curves per AP column, same order.
    pub curves: Vec<Vec<(f64, f64)>>,
}

pub struct EvalParams {
    pub vp_bins: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { vp_bins: 8 }
    }
}

pub fn evaluate(
    dataset: &LoadedDataset,
    config: &HierarchyConfig,
    dets: &[DetectionRecord],
    params: &EvalParams,
) -> Result<EvalOutcome> {
    let gts: Vec<GroundTruthBox> = dataset.manifest.ground_truth_boxes(config)?;
    let criteria: Vec<(String, MatchCriterion)> = vec![
        ("bounding-box".into(), MatchCriterion::bounding_box()),
        ("all".into(), MatchCriterion::all(params.vp_bins)),
        ("subcat+viewpoint".into(), MatchCriterion::subcat_viewpoint(params.vp_bins)),
        ("subcat".into(), MatchCriterion::subcat()),
        ("viewpoint".into(), MatchCriterion::viewpoint(params.vp_bins)),
    ];
    let mut ap_columns = Vec::new();
    let mut curves = Vec::new();
    for (name, criterion) in &criteria {
        let pr = evaluate_ap(dets, &gts, criterion);
        ap_columns.push((name.clone(), pr.as_ref().map(|p| p.average_precision)));
        curves.push(pr.map(|p| p.points).unwrap_or_default());
    }
    let vp_sweep = [4usize, 8, 16, 24]
        .into_iter()
        .map(|bins| {
            (bins, evaluate_ap(dets, &gts, &MatchCriterion::viewpoint(bins)).map(|p| p.average_precision))
        })
        .collect();

    let matches = greedy_box_matches(dets, &gts);
    let pairs: Vec<(ContinuousViewpoint, ContinuousViewpoint)> = matches
        .iter()
        .map(|&(di, gi)| {
            let d = &dets[di];
            let g = &gts[gi];
            (
                ContinuousViewpoint { azimuth: d.azimuth, elevation: d.elevation, distance: d.distance, occ: d.occ },
                ContinuousViewpoint { azimuth: g.azimuth, elevation: g.elevation, distance: g.distance, occ: g.occ },
            )
        })
        .collect();
    let rmse = if pairs.is_empty() { None } else { Some(pose_rmse(&pairs)?) };

    let confusion_pairs: Vec<(usize, usize)> = matches
        .iter()
        .filter_map(|&(di, gi)| dets[di].subcat.map(|s| (gts[gi].subcat, s)))
        .collect();
    let confusion = confusion_matrix(&confusion_pairs, config.subcat_count());

    let mut cad_ious = Vec::new();
    let mut seg2d_ious = Vec::new();
    for &(di, gi) in &matches {
        let det = &dets[di];
        let gt = &gts[gi];
        if det.finer.is_none() {
            continue;
        }
        let img = dataset
            .manifest
            .image(&gt.image_id)
            .with_context(|| format!("no image record for {}", gt.image_id))?;
        cad_ious.push(segmentation_iou(
            det,
            gt,
            &config.registry.finer,
            img.width,
            img.height,
            SegmentationMode::CadAlignment,
            None,
        )?);
        if let Some(mask) = dataset.mask(&gt.image_id)? {
            seg2d_ious.push(segmentation_iou(
                det,
                gt,
                &config.registry.finer,
                img.width,
                img.height,
                SegmentationMode::Segmentation2d,
                Some(&mask),
            )?);
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    Ok(EvalOutcome {
        ap_columns,
        vp_sweep,
        pose_rmse: rmse,
        mean_iou_cad: mean(&cad_ious),
        mean_iou_2d: mean(&seg2d_ious),
        confusion,
        matched: matches.len(),
        detections: dets.len(),
        ground_truths: gts.len(),
        curves,
    })
}

/// Write the resolved run parameters next to a command's outputs.
pub fn write_run_config(path: &Path, command: &str, body: &str) -> Result<()> {
    let text = format!("command {command}\n{body}");
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Save detections with their sidecar config echo.
pub fn save_detection_run(
    out: &Path,
    records: &[DetectionRecord],
    config: &HierarchyConfig,
) -> Result<()> {
    detections::save_detections(out, records, config)
}
