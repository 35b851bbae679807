//! Detections file: one line per detection,
//! `image_id x y w h energy v_bin azimuth elevation distance occ_dx occ_dy
//! subcat finer`, with `-` for label components a truncated hierarchy does
//! not estimate.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hierdet_core::eval::DetectionRecord;
use hierdet_core::image::Rect;
use hierdet_core::model::HierarchyConfig;

pub fn serialize_detections(records: &[DetectionRecord], config: &HierarchyConfig) -> String {
    let mut out = String::new();
    for d in records {
        let subcat = d
            .subcat
            .map(|s| config.subcategories[s].name.clone())
            .unwrap_or_else(|| "-".to_string());
        let finer = d
            .finer
            .map(|f| config.finer_name(f).to_string())
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {}\n",
            d.image_id,
            d.region.x,
            d.region.y,
            d.region.w,
            d.region.h,
            d.energy,
            d.v_bin,
            d.azimuth,
            d.elevation,
            d.distance,
            d.occ.0,
            d.occ.1,
            subcat,
            finer
        ));
    }
    out
}

pub fn parse_detections(text: &str, config: &HierarchyConfig) -> Result<Vec<DetectionRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let context = || format!("detections line {}", idx + 1);
        let mut tok = line.split_whitespace();
        let mut next = || tok.next().with_context(context);
        let image_id = next()?.to_string();
        let x: i32 = next()?.parse().with_context(context)?;
        let y: i32 = next()?.parse().with_context(context)?;
        let w: u32 = next()?.parse().with_context(context)?;
        let h: u32 = next()?.parse().with_context(context)?;
        let energy: f64 = next()?.parse().with_context(context)?;
        let v_bin: usize = next()?.parse().with_context(context)?;
        let azimuth: f64 = next()?.parse().with_context(context)?;
        let elevation: f64 = next()?.parse().with_context(context)?;
        let distance: f64 = next()?.parse().with_context(context)?;
        let occ_dx: f64 = next()?.parse().with_context(context)?;
        let occ_dy: f64 = next()?.parse().with_context(context)?;
        let subcat_name = next()?;
        let finer_name = next()?;
        let subcat = match subcat_name {
            "-" => None,
            name => Some(
                config
                    .subcat_index_of(name)
                    .with_context(|| format!("line {}: unknown sub-category {name}", idx + 1))?,
            ),
        };
        let finer = match finer_name {
            "-" => None,
            name => Some(
                config
                    .finer_index_of(name)
                    .with_context(|| format!("line {}: unknown finer-sub-category {name}", idx + 1))?,
            ),
        };
        out.push(DetectionRecord {
            image_id,
            region: Rect::new(x, y, w, h),
            energy,
            v_bin,
            azimuth,
            elevation,
            distance,
            occ: (occ_dx, occ_dy),
            subcat,
            finer,
        });
    }
    Ok(out)
}

pub fn save_detections(
    path: &Path,
    records: &[DetectionRecord],
    config: &HierarchyConfig,
) -> Result<()> {
    fs::write(path, serialize_detections(records, config))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn load_detections(path: &Path, config: &HierarchyConfig) -> Result<Vec<DetectionRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_detections(&text, config)
}
