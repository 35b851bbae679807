//! Dataset records: images, CAD registry entries, annotations, proposals,
//! and segmentation masks, with validation and the grid proposal generator.
//! (The on-disk manifest grammar lives in the companion IO crate.)

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::eval::GroundTruthBox;
use crate::image::Rect;
use crate::model::{azimuth_bin, ContinuousViewpoint, GroundTruth, HierarchyConfig, Subcategory, TrainingExample};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub path: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadRecord {
    pub finer_id: String,
    pub subcat_id: String,
    pub path: String,
}

/// Positive annotation (negatives are explicit `object = false` records).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub region: Rect,
    pub object: Option<AnnotatedObject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub v_bin: usize,
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub occ: (f64, f64),
    pub subcat_id: String,
    pub finer_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub image_id: String,
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskRecord {
    pub image_id: String,
    pub path: String,
}

/// In-memory dataset manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub images: Vec<ImageRecord>,
    pub cads: Vec<CadRecord>,
    pub annotations: Vec<AnnotationRecord>,
    pub proposals: Vec<ProposalRecord>,
    pub masks: Vec<MaskRecord>,
}

impl DatasetManifest {
    pub fn image(&self, id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|r| r.id == id)
    }

    pub fn proposals_for(&self, image_id: &str) -> Vec<Rect> {
        self.proposals
            .iter()
            .filter(|p| p.image_id == image_id)
            .map(|p| p.region)
            .collect()
    }

    pub fn annotations_for(&self, image_id: &str) -> Vec<&AnnotationRecord> {
        self.annotations.iter().filter(|a| a.image_id == image_id).collect()
    }

    /// Sub-categories and finer lists in CAD-record order of first
    /// appearance.
    pub fn subcategories(&self) -> Vec<Subcategory> {
        let mut subs: Vec<Subcategory> = Vec::new();
        for cad in &self.cads {
            match subs.iter_mut().find(|s| s.name == cad.subcat_id) {
                Some(sub) => {
                    if !sub.finer.contains(&cad.finer_id) {
                        sub.finer.push(cad.finer_id.clone());
                    }
                }
                None => subs.push(Subcategory {
                    name: cad.subcat_id.clone(),
                    finer: alloc::vec![cad.finer_id.clone()],
                }),
            }
        }
        subs
    }

    /// Structural validation: ids resolve, geometry fields are sane.
    pub fn validate(&self) -> Result<()> {
        let image_exists = |id: &str| self.images.iter().any(|r| r.id == id);
        let find_cad = |finer: &str| self.cads.iter().find(|c| c.finer_id == finer);
        for (i, img) in self.images.iter().enumerate() {
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidRecord {
                    line: i,
                    message: format!("image {} has zero size", img.id),
                });
            }
        }
        for (i, ann) in self.annotations.iter().enumerate() {
            if !image_exists(&ann.image_id) {
                return Err(Error::InvalidRecord {
                    line: i,
                    message: format!("annotation references unknown image {}", ann.image_id),
                });
            }
            if ann.region.area() == 0 {
                return Err(Error::InvalidRecord { line: i, message: "empty region".into() });
            }
            if let Some(obj) = &ann.object {
                let cad = find_cad(&obj.finer_id).ok_or_else(|| Error::InvalidRecord {
                    line: i,
                    message: format!("annotation references unknown CAD id {}", obj.finer_id),
                })?;
                if cad.subcat_id != obj.subcat_id {
                    return Err(Error::InvalidRecord {
                        line: i,
                        message: format!(
                            "finer {} belongs to sub-category {}, not {}",
                            obj.finer_id, cad.subcat_id, obj.subcat_id
                        ),
                    });
                }
                if !(obj.distance > 0.0) {
                    return Err(Error::InvalidRecord {
                        line: i,
                        message: "distance must be positive".into(),
                    });
                }
            }
        }
        for (i, prop) in self.proposals.iter().enumerate() {
            if !image_exists(&prop.image_id) {
                return Err(Error::InvalidRecord {
                    line: i,
                    message: format!("proposal references unknown image {}", prop.image_id),
                });
            }
        }
        for (i, mask) in self.masks.iter().enumerate() {
            if !image_exists(&mask.image_id) {
                return Err(Error::InvalidRecord {
                    line: i,
                    message: format!("mask references unknown image {}", mask.image_id),
                });
            }
        }
        Ok(())
    }

    /// Annotations as training examples under a configuration (name → index
    /// resolution plus azimuth-bin consistency).
    pub fn training_examples(&self, config: &HierarchyConfig) -> Result<Vec<TrainingExample>> {
        let mut out = Vec::new();
        for (i, ann) in self.annotations.iter().enumerate() {
            let truth = match &ann.object {
                None => GroundTruth::Background,
                Some(obj) => {
                    let subcat = config.subcat_index_of(&obj.subcat_id).ok_or_else(|| {
                        Error::InvalidRecord {
                            line: i,
                            message: format!("unknown sub-category {}", obj.subcat_id),
                        }
                    })?;
                    let finer = config.finer_index_of(&obj.finer_id).ok_or_else(|| {
                        Error::InvalidRecord {
                            line: i,
                            message: format!("unknown finer-sub-category {}", obj.finer_id),
                        }
                    })?;
                    let expected = azimuth_bin(obj.azimuth, config.azimuth_bins);
                    if obj.v_bin != expected {
                        return Err(Error::InvalidRecord {
                            line: i,
                            message: format!(
                                "viewpoint bin {} disagrees with azimuth (expected {expected})",
                                obj.v_bin
                            ),
                        });
                    }
                    GroundTruth::Object {
                        v_bin: obj.v_bin,
                        viewpoint: ContinuousViewpoint {
                            azimuth: obj.azimuth,
                            elevation: obj.elevation,
                            distance: obj.distance,
                            occ: obj.occ,
                        },
                        subcat,
                        finer,
                    }
                }
            };
            out.push(TrainingExample { image_id: ann.image_id.clone(), region: ann.region, truth });
        }
        Ok(out)
    }

    /// Positive annotations as evaluation ground truth.
    pub fn ground_truth_boxes(&self, config: &HierarchyConfig) -> Result<Vec<GroundTruthBox>> {
        let mut out = Vec::new();
        for (i, ann) in self.annotations.iter().enumerate() {
            if let Some(obj) = &ann.object {
                let subcat = config.subcat_index_of(&obj.subcat_id).ok_or_else(|| {
                    Error::InvalidRecord {
                        line: i,
                        message: format!("unknown sub-category {}", obj.subcat_id),
                    }
                })?;
                let finer = config.finer_index_of(&obj.finer_id).ok_or_else(|| {
                    Error::InvalidRecord {
                        line: i,
                        message: format!("unknown finer-sub-category {}", obj.finer_id),
                    }
                })?;
                out.push(GroundTruthBox {
                    image_id: ann.image_id.clone(),
                    region: ann.region,
                    v_bin: obj.v_bin,
                    azimuth: obj.azimuth,
                    elevation: obj.elevation,
                    distance: obj.distance,
                    occ: obj.occ,
                    subcat,
                    finer,
                });
            }
        }
        Ok(out)
    }
}

/// Deterministic sliding-window proposals, clipped to the image.
pub fn grid_proposals(
    image_w: u32,
    image_h: u32,
    scales: &[(u32, u32)],
    strides: &[u32],
) -> Vec<Rect> {
    let mut out = Vec::new();
    for (i, &(sw, sh)) in scales.iter().enumerate() {
        let stride = strides.get(i).or_else(|| strides.last()).copied().unwrap_or(sw).max(1);
        let w = sw.min(image_w);
        let h = sh.min(image_h);
        let mut y = 0u32;
        loop {
            let mut x = 0u32;
            loop {
                out.push(Rect::new(x as i32, y as i32, w, h));
                x += stride;
                if x + w > image_w {
                    break;
                }
            }
            y += stride;
            if y + h > image_h {
                break;
            }
        }
    }
    out
}
