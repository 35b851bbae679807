//! Precomputed feature and detector-score files: one record per line,
//! `image_id x y w h dim v1 ... vdim`, whitespace separated. Detector scores
//! use the same format with dim = 1.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hierdet_core::features::PrecomputedProvider;
use hierdet_core::image::Rect;
use hierdet_core::potentials::PrecomputedDetector;

fn parse_records(text: &str) -> Result<Vec<(String, Rect, Vec<f64>)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let context = || format!("line {}", idx + 1);
        let id = tok.next().with_context(context)?.to_string();
        let x: i32 = tok.next().with_context(context)?.parse().with_context(context)?;
        let y: i32 = tok.next().with_context(context)?.parse().with_context(context)?;
        let w: u32 = tok.next().with_context(context)?.parse().with_context(context)?;
        let h: u32 = tok.next().with_context(context)?.parse().with_context(context)?;
        let dim: usize = tok.next().with_context(context)?.parse().with_context(context)?;
        let values: Vec<f64> = tok
            .map(|t| t.parse::<f64>().with_context(context))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            bail!("line {}: declared dim {} but {} values", idx + 1, dim, values.len());
        }
        out.push((id, Rect::new(x, y, w, h), values));
    }
    Ok(out)
}

/// Load a feature file as an appearance provider. All records must share one
/// dimension.
pub fn load_feature_provider(path: &Path, provider_id: &str) -> Result<PrecomputedProvider> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_records(&text)?;
    let dim = match records.first() {
        Some((_, _, v)) => v.len(),
        None => bail!("feature file {} is empty", path.display()),
    };
    let mut provider = PrecomputedProvider::new(provider_id, dim);
    for (id, region, values) in records {
        provider.insert(&id, region, values)?;
    }
    Ok(provider)
}

/// Load a detector-score file (dim = 1 records).
pub fn load_detector_scores(path: &Path) -> Result<PrecomputedDetector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut detector = PrecomputedDetector::new();
    for (id, region, values) in parse_records(&text)? {
        if values.len() != 1 {
            bail!("detector scores must have dim 1, got {}", values.len());
        }
        detector.insert(&id, region, values[0]);
    }
    Ok(detector)
}

pub fn serialize_records(records: &[(String, Rect, Vec<f64>)]) -> String {
    let mut out = String::new();
    for (id, r, values) in records {
        out.push_str(&format!("{id} {} {} {} {} {}", r.x, r.y, r.w, r.h, values.len()));
        for v in values {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out
}
