//! Synthetic rendered dataset generator.
//!
//! Procedural shape families stand in for real CAD collections: each
//! finer-sub-category is a distinct composite of cuboids, rendered with flat
//! shading onto a noise background at a randomly drawn viewpoint. Ground
//! truth (box, azimuth bin, continuous viewpoint, labels) is recorded
//! exactly, proposals are the ground-truth box plus jittered copies and
//! random negatives, and everything is deterministic per seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dataset::{
    AnnotatedObject, AnnotationRecord, CadRecord, DatasetManifest, ImageRecord, MaskRecord,
    ProposalRecord,
};
use crate::geometry::{cuboid, normalize_mesh, render_shaded, CadModel, Camera, CameraPose, SilhouetteMask};
use crate::image::{GrayImage, Rect};
use crate::model::{azimuth_bin, Subcategory};
use crate::rng::{derive_stream, CounterRng};
use crate::{Error, Result};

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub subcats: usize,
    pub finer_per_subcat: usize,
    pub scenes: usize,
    pub image_width: u32,
    pub image_height: u32,
    pub azimuth_bins: usize,
    pub elevation_range: (f64, f64),
    pub distance_range: (f64, f64),
    /// Maximum |integer jitter| of the object placement, pixels.
    pub center_jitter: i32,
    /// Background noise amplitude around mid-gray.
    pub background_noise: f64,
    pub jittered_proposals: usize,
    pub negative_proposals: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            subcats: 2,
            finer_per_subcat: 2,
            scenes: 50,
            image_width: 128,
            image_height: 128,
            azimuth_bins: 8,
            elevation_range: (0.15, 0.55),
            distance_range: (2.6, 4.2),
            center_jitter: 6,
            background_noise: 0.08,
            jittered_proposals: 2,
            negative_proposals: 3,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subcats < 2 || self.finer_per_subcat < 2 {
            return Err(Error::InvalidConfig(
                "synthetic spec needs at least 2 sub-categories with 2 finer each".into(),
            ));
        }
        if self.scenes == 0 {
            return Err(Error::InvalidConfig("no scenes requested".into()));
        }
        if self.image_width < 64 || self.image_height < 64 {
            return Err(Error::InvalidConfig("images must be at least 64x64".into()));
        }
        if self.azimuth_bins < 2 {
            return Err(Error::InvalidConfig("need at least 2 azimuth bins".into()));
        }
        if !(self.elevation_range.0 <= self.elevation_range.1)
            || self.elevation_range.0 < 0.0
            || self.elevation_range.1 > core::f64::consts::FRAC_PI_2
        {
            return Err(Error::InvalidConfig("bad elevation range".into()));
        }
        if !(self.distance_range.0 > 1.5 && self.distance_range.0 <= self.distance_range.1) {
            return Err(Error::InvalidConfig("bad distance range".into()));
        }
        Ok(())
    }
}

/// Procedural shape families grouped into sub-categories.
#[derive(Debug, Clone)]
pub struct ShapeLibrary {
    pub subcategories: Vec<Subcategory>,
    /// Normalized models in global finer order; ids equal the finer names.
    pub finer_models: Vec<CadModel>,
}

fn merge_parts(id: &str, parts: Vec<CadModel>) -> CadModel {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for part in parts {
        let base = vertices.len() as u32;
        vertices.extend(part.vertices);
        faces.extend(part.faces.into_iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }
    CadModel { id: String::from(id), vertices, faces }
}

const FAMILY_NAMES: [&str; 4] = ["winged", "hulled", "finned", "blocky"];

/// Deterministic shape for (sub-category, finer) indices. Families differ in
/// gross structure; finer variants differ in part proportions. All shapes
/// have a distinct front, back, and top so azimuth bins are separable, and a
/// small lateral offset breaks mirror symmetry.
fn make_shape(id: &str, subcat: usize, finer: usize) -> Result<CadModel> {
    let t = finer as f64;
    let parts = match subcat % 4 {
        0 => {
            // Fuselage + swept wings + tail fin (aeroplane-like).
            let span = 0.46 - 0.18 * t;
            let fin = 0.10 + 0.10 * t;
            alloc::vec![
                cuboid("fuselage", [0.0, 0.0, 0.0], [0.50, 0.09, 0.08]),
                cuboid("wings", [0.08, 0.02, 0.02], [0.11 + 0.04 * t, span, 0.02]),
                cuboid("fin", [-0.44, 0.01, 0.10 + fin / 2.0], [0.05, 0.02, fin]),
                cuboid("tailplane", [-0.44, 0.0, 0.02], [0.06, 0.17, 0.015]),
                cuboid("nose", [0.52, 0.0, -0.01], [0.06, 0.05, 0.05]),
            ]
        }
        1 => {
            // Hull + bow + cabin (boat-like).
            let cabin_h = 0.20 - 0.11 * t;
            let cabin_l = 0.10 + 0.16 * t;
            alloc::vec![
                cuboid("hull", [-0.05, 0.0, 0.0], [0.38, 0.15, 0.08]),
                cuboid("bow", [0.40, 0.0, 0.01], [0.12, 0.07, 0.06]),
                cuboid("cabin", [-0.14, 0.02, 0.08 + cabin_h], [cabin_l, 0.10, cabin_h]),
                cuboid("mast", [0.18, -0.01, 0.16], [0.015, 0.015, 0.12 + 0.08 * t]),
            ]
        }
        2 => {
            // Slab with a large dorsal fin and a front ram.
            let fin = 0.16 + 0.10 * t;
            alloc::vec![
                cuboid("body", [0.0, 0.0, 0.0], [0.42, 0.16 - 0.05 * t, 0.07]),
                cuboid("dorsal", [-0.10, 0.02, 0.07 + fin], [0.10, 0.03, fin]),
                cuboid("ram", [0.48, 0.0, 0.0], [0.08, 0.06, 0.10 + 0.06 * t]),
            ]
        }
        _ => {
            // L-shaped block stack.
            let tower = 0.18 + 0.12 * t;
            alloc::vec![
                cuboid("base", [0.0, 0.0, 0.0], [0.40, 0.20, 0.08]),
                cuboid("tower", [-0.22, 0.03, 0.08 + tower], [0.14 - 0.04 * t, 0.14, tower]),
                cuboid("lip", [0.42, -0.02, 0.04], [0.06, 0.12, 0.04]),
            ]
        }
    };
    normalize_mesh(&merge_parts(id, parts))
}

/// Build the shape library for the requested counts.
pub fn build_shape_library(subcats: usize, finer_per_subcat: usize) -> Result<ShapeLibrary> {
    let mut subcategories = Vec::with_capacity(subcats);
    let mut finer_models = Vec::new();
    for s in 0..subcats {
        let family = FAMILY_NAMES[s % 4];
        let name =
            if s < 4 { String::from(family) } else { format!("{family}{}", s / 4 + 1) };
        let mut finer = Vec::with_capacity(finer_per_subcat);
        for f in 0..finer_per_subcat {
            let fname = format!("{name}{f}");
            finer_models.push(make_shape(&fname, s, f)?);
            finer.push(fname);
        }
        subcategories.push(Subcategory { name, finer });
    }
    Ok(ShapeLibrary { subcategories, finer_models })
}

/// A generated dataset: records plus the in-memory images, masks and models
/// (the IO crate writes these to disk).
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub images: Vec<(String, GrayImage)>,
    pub masks: Vec<(String, SilhouetteMask)>,
    pub library: ShapeLibrary,
}

fn background(width: u32, height: u32, amplitude: f64, rng: &mut CounterRng) -> GrayImage {
    let mut raw: Vec<f32> = (0..width * height).map(|_| rng.uniform() as f32).collect();
    // Two 3x3 box-blur passes smooth the noise into soft blobs.
    for _ in 0..2 {
        let mut blurred = raw.clone();
        for y in 0..height as i64 {
            for x in 0..width as i64 {
                let mut acc = 0.0f32;
                let mut count = 0;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                            acc += raw[(ny * width as i64 + nx) as usize];
                            count += 1;
                        }
                    }
                }
                blurred[(y * width as i64 + x) as usize] = acc / count as f32;
            }
        }
        raw = blurred;
    }
    let data = raw
        .into_iter()
        .map(|v| (0.5 + amplitude * (2.0 * v as f64 - 1.0)) as f32)
        .collect();
    GrayImage::from_data(width, height, data).expect("sized buffer")
}

struct Scene {
    finer: usize,
    azimuth: f64,
    elevation: f64,
    distance: f64,
    jitter: (i32, i32),
    image: GrayImage,
    mask: SilhouetteMask,
    bbox: Rect,
}

fn render_scene(spec: &SynthSpec, library: &ShapeLibrary, index: usize) -> Result<Scene> {
    let (w, h) = (spec.image_width, spec.image_height);
    let camera = Camera::standard(w, h);
    let light = [0.45, -0.6, 0.7];
    for attempt in 0..32u64 {
        let mut rng = CounterRng::new(spec.seed, derive_stream(&[0x5ce7e, index as u64, attempt]));
        let finer = rng.index(library.finer_models.len());
        let azimuth = rng.uniform_in(0.0, 2.0 * core::f64::consts::PI);
        let elevation = rng.uniform_in(spec.elevation_range.0, spec.elevation_range.1);
        let distance = rng.uniform_in(spec.distance_range.0, spec.distance_range.1);
        let jitter = (
            rng.index(2 * spec.center_jitter.max(0) as usize + 1) as i32 - spec.center_jitter,
            rng.index(2 * spec.center_jitter.max(0) as usize + 1) as i32 - spec.center_jitter,
        );
        let pose = CameraPose::new(azimuth, elevation, distance)?;
        let shaded = render_shaded(&library.finer_models[finer], &pose, &camera, light, 0.3, 0.55)?;
        let mask = shaded.mask.translated(jitter.0, jitter.1);
        let bbox = match mask.bounding_box() {
            Some(b) if b.w >= 16 && b.h >= 16 => b,
            _ => continue,
        };
        // Keep the object fully in frame so the box *is* the silhouette.
        if bbox.x == 0 || bbox.y == 0 || bbox.right() == w as i64 || bbox.bottom() == h as i64 {
            continue;
        }
        let mut image = background(w, h, spec.background_noise, &mut rng);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let (sx, sy) = (x - jitter.0 as i64, y - jitter.1 as i64);
                if sx >= 0 && sy >= 0 && sx < w as i64 && sy < h as i64 {
                    let idx = (sy * w as i64 + sx) as usize;
                    if shaded.mask.bits()[idx] {
                        image.set(x as u32, y as u32, shaded.shade[idx]);
                    }
                }
            }
        }
        return Ok(Scene { finer, azimuth, elevation, distance, jitter, image, mask, bbox });
    }
    Err(Error::InvalidConfig(format!("scene {index} never produced an in-frame object")))
}

fn jittered_box(rng: &mut CounterRng, bbox: Rect, w: u32, h: u32) -> Rect {
    let scale = rng.uniform_in(0.85, 1.2);
    let nw = ((bbox.w as f64 * scale) as u32).clamp(16, w);
    let nh = ((bbox.h as f64 * scale) as u32).clamp(16, h);
    let dx = rng.uniform_in(-0.2, 0.2) * bbox.w as f64;
    let dy = rng.uniform_in(-0.2, 0.2) * bbox.h as f64;
    let x = (bbox.x as f64 + dx).round() as i32;
    let y = (bbox.y as f64 + dy).round() as i32;
    Rect::new(
        x.clamp(0, (w - nw) as i32),
        y.clamp(0, (h - nh) as i32),
        nw,
        nh,
    )
}

fn negative_box(rng: &mut CounterRng, gt: Rect, w: u32, h: u32) -> Rect {
    for _ in 0..50 {
        let side = (w.min(h) as f64 * rng.uniform_in(0.25, 0.6)) as u32;
        let nw = side.max(16);
        let nh = ((side as f64 * rng.uniform_in(0.7, 1.4)) as u32).clamp(16, h);
        let x = rng.index((w - nw) as usize + 1) as i32;
        let y = rng.index((h - nh) as usize + 1) as i32;
        let candidate = Rect::new(x, y, nw, nh);
        if candidate.iou(&gt) < 0.3 {
            return candidate;
        }
    }
    // Corner fallback; overlap there is at most marginal.
    Rect::new(0, 0, 16, 16)
}

/// Generate the dataset: scenes, annotations, proposals, masks, CAD records.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let library = build_shape_library(spec.subcats, spec.finer_per_subcat)?;
    let mut manifest = DatasetManifest::default();
    let mut images = Vec::with_capacity(spec.scenes);
    let mut masks = Vec::with_capacity(spec.scenes);
    let mut finer_names = Vec::new();
    for sub in &library.subcategories {
        for f in &sub.finer {
            manifest.cads.push(CadRecord {
                finer_id: f.clone(),
                subcat_id: sub.name.clone(),
                path: format!("cads/{f}.obj"),
            });
            finer_names.push((f.clone(), sub.name.clone()));
        }
    }
    let (w, h) = (spec.image_width, spec.image_height);
    for index in 0..spec.scenes {
        let scene = render_scene(spec, &library, index)?;
        let id = format!("scene_{index:04}");
        manifest.images.push(ImageRecord {
            id: id.clone(),
            path: format!("images/{id}.pgm"),
            width: w,
            height: h,
        });
        manifest.masks.push(MaskRecord { image_id: id.clone(), path: format!("masks/{id}.pgm") });
        let (cx, cy) = scene.bbox.center();
        let occ = (
            w as f64 / 2.0 + scene.jitter.0 as f64 - cx,
            h as f64 / 2.0 + scene.jitter.1 as f64 - cy,
        );
        let (finer_id, subcat_id) = finer_names[scene.finer].clone();
        manifest.annotations.push(AnnotationRecord {
            image_id: id.clone(),
            region: scene.bbox,
            object: Some(AnnotatedObject {
                v_bin: azimuth_bin(scene.azimuth, spec.azimuth_bins),
                azimuth: scene.azimuth,
                elevation: scene.elevation,
                distance: scene.distance,
                occ,
                subcat_id,
                finer_id,
            }),
        });
        let mut prop_rng =
            CounterRng::new(spec.seed, derive_stream(&[0x9c09, index as u64]));
        let mut props = alloc::vec![scene.bbox];
        for _ in 0..spec.jittered_proposals {
            props.push(jittered_box(&mut prop_rng, scene.bbox, w, h));
        }
        for _ in 0..spec.negative_proposals {
            props.push(negative_box(&mut prop_rng, scene.bbox, w, h));
        }
        for region in props {
            manifest.proposals.push(ProposalRecord { image_id: id.clone(), region });
        }
        images.push((id.clone(), scene.image));
        masks.push((id, scene.mask));
    }
    manifest.validate()?;
    Ok(SynthDataset { manifest, images, masks, library })
}
