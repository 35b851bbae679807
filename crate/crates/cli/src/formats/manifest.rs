//! Dataset manifest grammar: one whitespace-separated record per line with a
//! tag prefix. Lines starting with `#` and blank lines are ignored.
//!
//! ```text
//! IMG  <image_id> <relative_path> <width> <height>
//! CAD  <finer_id> <subcat_id> <relative_obj_path>
//! ANN  <image_id> <x> <y> <w> <h> 0
//! ANN  <image_id> <x> <y> <w> <h> 1 <v_bin> <azimuth> <elevation> <distance>
//!      <occ_dx> <occ_dy> <subcat_id> <finer_id>
//! PROP <image_id> <x> <y> <w> <h>
//! MASK <image_id> <relative_pgm_path>
//! ```
//!
//! Angles are radians, distances are object-diagonal units, `occ` is pixels
//! relative to the box center.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hierdet_core::dataset::{
    AnnotatedObject, AnnotationRecord, CadRecord, DatasetManifest, ImageRecord, MaskRecord,
    ProposalRecord,
};
use hierdet_core::image::Rect;
use hierdet_core::Error as CoreError;

pub fn serialize_manifest(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    for img in &manifest.images {
        out.push_str(&format!("IMG {} {} {} {}\n", img.id, img.path, img.width, img.height));
    }
    for cad in &manifest.cads {
        out.push_str(&format!("CAD {} {} {}\n", cad.finer_id, cad.subcat_id, cad.path));
    }
    for mask in &manifest.masks {
        out.push_str(&format!("MASK {} {}\n", mask.image_id, mask.path));
    }
    for ann in &manifest.annotations {
        let r = ann.region;
        match &ann.object {
            None => out.push_str(&format!("ANN {} {} {} {} {} 0\n", ann.image_id, r.x, r.y, r.w, r.h)),
            Some(o) => out.push_str(&format!(
                "ANN {} {} {} {} {} 1 {} {} {} {} {} {} {} {}\n",
                ann.image_id,
                r.x,
                r.y,
                r.w,
                r.h,
                o.v_bin,
                o.azimuth,
                o.elevation,
                o.distance,
                o.occ.0,
                o.occ.1,
                o.subcat_id,
                o.finer_id
            )),
        }
    }
    for prop in &manifest.proposals {
        let r = prop.region;
        out.push_str(&format!("PROP {} {} {} {} {}\n", prop.image_id, r.x, r.y, r.w, r.h));
    }
    out
}

fn record_err(line: usize, message: impl Into<String>) -> anyhow::Error {
    CoreError::InvalidRecord { line, message: message.into() }.into()
}

struct Fields<'a> {
    line: usize,
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Fields<'a> {
    fn next_str(&mut self) -> Result<&'a str> {
        self.iter.next().ok_or_else(|| record_err(self.line, "missing field"))
    }

    fn next_parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let token = self.next_str()?;
        token
            .parse()
            .map_err(|_| record_err(self.line, format!("bad {what}: {token}")))
    }

    fn rect(&mut self) -> Result<Rect> {
        Ok(Rect::new(
            self.next_parse("x")?,
            self.next_parse("y")?,
            self.next_parse("w")?,
            self.next_parse("h")?,
        ))
    }

    fn finish(mut self) -> Result<()> {
        match self.iter.next() {
            Some(extra) => Err(record_err(self.line, format!("unexpected field {extra}"))),
            None => Ok(()),
        }
    }
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let mut manifest = DatasetManifest::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = Fields { line, iter: trimmed.split_whitespace() };
        let tag = fields.next_str()?;
        match tag {
            "IMG" => {
                manifest.images.push(ImageRecord {
                    id: fields.next_str()?.to_string(),
                    path: fields.next_str()?.to_string(),
                    width: fields.next_parse("width")?,
                    height: fields.next_parse("height")?,
                });
                fields.finish()?;
            }
            "CAD" => {
                manifest.cads.push(CadRecord {
                    finer_id: fields.next_str()?.to_string(),
                    subcat_id: fields.next_str()?.to_string(),
                    path: fields.next_str()?.to_string(),
                });
                fields.finish()?;
            }
            "ANN" => {
                let image_id = fields.next_str()?.to_string();
                let region = fields.rect()?;
                let o: u8 = fields.next_parse("object flag")?;
                let object = match o {
                    0 => None,
                    1 => Some(AnnotatedObject {
                        v_bin: fields.next_parse("viewpoint bin")?,
                        azimuth: fields.next_parse("azimuth")?,
                        elevation: fields.next_parse("elevation")?,
                        distance: fields.next_parse("distance")?,
                        occ: (fields.next_parse("occ_dx")?, fields.next_parse("occ_dy")?),
                        subcat_id: fields.next_str()?.to_string(),
                        finer_id: fields.next_str()?.to_string(),
                    }),
                    other => return Err(record_err(line, format!("object flag must be 0/1, got {other}"))),
                };
                manifest.annotations.push(AnnotationRecord { image_id, region, object });
                fields.finish()?;
            }
            "PROP" => {
                manifest.proposals.push(ProposalRecord {
                    image_id: fields.next_str()?.to_string(),
                    region: fields.rect()?,
                });
                fields.finish()?;
            }
            "MASK" => {
                manifest.masks.push(MaskRecord {
                    image_id: fields.next_str()?.to_string(),
                    path: fields.next_str()?.to_string(),
                });
                fields.finish()?;
            }
            other => return Err(record_err(line, format!("unknown record tag {other}"))),
        }
    }
    manifest.validate()?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_manifest(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    fs::write(path, serialize_manifest(manifest))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
