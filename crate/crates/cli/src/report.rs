//! Plain-text evaluation report and per-criterion precision/recall CSVs.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hierdet_core::model::HierarchyConfig;

use crate::pipeline::EvalOutcome;

fn column_label(name: &str) -> &str {
    match name {
        "bounding-box" => "Bounding Box",
        "all" => "All",
        "subcat+viewpoint" => "Sub-category & Viewpoint",
        "subcat" => "Sub-category",
        "viewpoint" => "Viewpoint",
        other => other,
    }
}

fn fmt_ap(ap: &Option<f64>) -> String {
    match ap {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

pub fn render_report(outcome: &EvalOutcome, config: &HierarchyConfig, vp_bins: usize) -> String {
    let mut out = String::new();
    out.push_str("HIERDET EVALUATION REPORT\n");
    out.push_str(&format!(
        "detections {}  ground-truths {}  box-matched {}\n\n",
        outcome.detections, outcome.ground_truths, outcome.matched
    ));
    out.push_str(&format!("Average precision ({} viewpoint bins)\n", vp_bins));
    for (name, ap) in &outcome.ap_columns {
        out.push_str(&format!("  {:<26} {}\n", column_label(name), fmt_ap(ap)));
    }
    out.push_str("\nViewpoint AP across azimuth discretizations\n");
    for (bins, ap) in &outcome.vp_sweep {
        out.push_str(&format!("  {:>2} bins {}\n", bins, fmt_ap(ap)));
    }
    out.push_str("\nContinuous viewpoint RMSE over box-matched detections\n");
    match &outcome.pose_rmse {
        Some(r) => out.push_str(&format!(
            "  azimuth {:.2} deg  elevation {:.2} deg  distance {:.3}\n",
            r.azimuth_deg, r.elevation_deg, r.distance
        )),
        None => out.push_str("  n/a (no matches)\n"),
    }
    out.push_str("\nProjection-mask IoU over box-matched detections\n");
    out.push_str(&format!(
        "  cad-alignment   {}\n",
        outcome.mean_iou_cad.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
    ));
    out.push_str(&format!(
        "  2d-segmentation {}\n",
        outcome.mean_iou_2d.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
    ));
    out.push_str("\nSub-category confusion (rows = truth, columns = predicted)\n");
    let names: Vec<&str> = config.subcategories.iter().map(|s| s.name.as_str()).collect();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(4).max(5);
    out.push_str(&format!("  {:width$}", "", width = width + 2));
    for n in &names {
        out.push_str(&format!(" {n:>width$}"));
    }
    out.push('\n');
    for (i, row) in outcome.confusion.iter().enumerate() {
        out.push_str(&format!("  {:<width$}", names.get(i).unwrap_or(&"?"), width = width + 2));
        for v in row {
            out.push_str(&format!(" {v:>width$}"));
        }
        out.push('\n');
    }
    out
}

/// One `recall,precision` CSV per AP column.
pub fn write_curves(dir: &Path, outcome: &EvalOutcome) -> Result<()> {
    for ((name, _), points) in outcome.ap_columns.iter().zip(&outcome.curves) {
        let mut csv = String::from("recall,precision\n");
        for (r, p) in points {
            csv.push_str(&format!("{r},{p}\n"));
        }
        let path = dir.join(format!("curve_{}.csv", name.replace('+', "_")));
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
