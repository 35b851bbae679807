//! Self-describing weight container.
//!
//! Text header with the structural configuration and the named block table,
//! followed by the flat coefficient array as hexadecimal f64 bit patterns
//! (bit-exact round trip), then the trained detector, the distance-sampler
//! reference records, and a convergence flag:
//!
//! ```text
//! HIERDET-WEIGHTS v1
//! config_hash <hex16>
//! azimuth_bins <m>
//! layers <1|2|3>
//! subcat <name> <finer_name>...     (one per sub-category)
//! samples <n_a> <n_e> <n_d> <n_occ>
//! sigma <sigma_a> <sigma_e> <mu_e> <sigma_r_frac>      (hex f64)
//! c_svm <hex f64>
//! hog <template_px> <cell_px> <bins>
//! app_dim <d>
//! blocks <count>
//! block <name> <offset> <len>
//! coeffs <total>
//! <hex f64 ...>                      (8 per line)
//! detector <dim> <hex bias>
//! <hex f64 ...>                      (detector weights, 8 per line)
//! refs <count>
//! ref <hex w> <hex h> <hex distance>
//! converged <0|1>
//! END
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hierdet_core::features::HogParams;
use hierdet_core::learning::LogisticModel;
use hierdet_core::model::{
    CadRegistry, HierarchyConfig, SampleCounts, SigmaParams, Subcategory, WeightLayout,
    WeightVector,
};
use hierdet_core::sampling::DistanceReference;

/// Everything a trained model needs at inference time. The configuration is
/// stored with an empty CAD registry; attach one from a dataset manifest
/// before use.
pub struct StoredModel {
    pub config: HierarchyConfig,
    pub weights: WeightVector,
    pub detector: LogisticModel,
    pub refs: DistanceReference,
    pub converged: bool,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(token: &str) -> Result<f64> {
    let bits = u64::from_str_radix(token, 16).with_context(|| format!("bad hex f64 {token}"))?;
    Ok(f64::from_bits(bits))
}

pub fn serialize_model(model: &StoredModel) -> String {
    let config = &model.config;
    let layout = WeightLayout::new(config);
    let mut out = String::new();
    out.push_str("HIERDET-WEIGHTS v1\n");
    out.push_str(&format!("config_hash {:016x}\n", model.weights.config_hash));
    out.push_str(&format!("azimuth_bins {}\n", config.azimuth_bins));
    out.push_str(&format!("layers {}\n", config.layers));
    for sub in &config.subcategories {
        out.push_str(&format!("subcat {} {}\n", sub.name, sub.finer.join(" ")));
    }
    let sc = config.sample_counts;
    out.push_str(&format!("samples {} {} {} {}\n", sc.azimuth, sc.elevation, sc.distance, sc.occlusion));
    let s = config.sigmas;
    out.push_str(&format!(
        "sigma {} {} {} {}\n",
        hex(s.sigma_a),
        hex(s.sigma_e),
        hex(s.mu_e),
        hex(s.sigma_r_frac)
    ));
    out.push_str(&format!("c_svm {}\n", hex(config.c_svm)));
    out.push_str(&format!("hog {} {} {}\n", config.hog.template, config.hog.cell_px, config.hog.bins));
    out.push_str(&format!("app_dim {}\n", config.app_dim));
    out.push_str(&format!("blocks {}\n", layout.blocks().len()));
    for (name, offset, len) in layout.blocks() {
        out.push_str(&format!("block {name} {offset} {len}\n"));
    }
    out.push_str(&format!("coeffs {}\n", model.weights.values.len()));
    for chunk in model.weights.values.chunks(8) {
        let row: Vec<String> = chunk.iter().map(|&v| hex(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str(&format!(
        "detector {} {}\n",
        model.detector.weights.len(),
        hex(model.detector.bias)
    ));
    for chunk in model.detector.weights.chunks(8) {
        let row: Vec<String> = chunk.iter().map(|&v| hex(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str(&format!("refs {}\n", model.refs.len()));
    for &(w, h, d) in model.refs.records() {
        out.push_str(&format!("ref {} {} {}\n", hex(w), hex(h), hex(d)));
    }
    out.push_str(&format!("converged {}\n", if model.converged { 1 } else { 0 }));
    out.push_str("END\n");
    out
}

pub fn parse_model(text: &str) -> Result<StoredModel> {
    let mut lines = text.lines();
    let mut next = || lines.next().ok_or_else(|| anyhow::anyhow!("truncated weight file"));
    if next()?.trim() != "HIERDET-WEIGHTS v1" {
        bail!("not a HIERDET-WEIGHTS v1 file");
    }
    let mut config_hash: Option<u64> = None;
    let mut azimuth_bins = 0usize;
    let mut layers = 0u8;
    let mut subcategories = Vec::new();
    let mut sample_counts = SampleCounts::default();
    let mut sigmas =
        SigmaParams { sigma_a: 0.0, sigma_e: 0.0, mu_e: 0.0, sigma_r_frac: 0.15 };
    let mut c_svm = 1.0;
    let mut hog = HogParams::default();
    let mut app_dim = 0usize;
    let mut stored_blocks: Vec<(String, usize, usize)> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    let mut detector: Option<LogisticModel> = None;
    let mut refs = DistanceReference::new();
    let mut converged = false;
    loop {
        let line = next()?.trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let tag = tok.next().unwrap();
        match tag {
            "config_hash" => {
                config_hash = Some(u64::from_str_radix(
                    tok.next().context("config_hash value")?,
                    16,
                )?);
            }
            "azimuth_bins" => azimuth_bins = tok.next().context("azimuth_bins")?.parse()?,
            "layers" => layers = tok.next().context("layers")?.parse()?,
            "subcat" => {
                let name = tok.next().context("subcat name")?.to_string();
                let finer = tok.map(str::to_string).collect();
                subcategories.push(Subcategory { name, finer });
            }
            "samples" => {
                sample_counts = SampleCounts {
                    azimuth: tok.next().context("n_a")?.parse()?,
                    elevation: tok.next().context("n_e")?.parse()?,
                    distance: tok.next().context("n_d")?.parse()?,
                    occlusion: tok.next().context("n_occ")?.parse()?,
                };
            }
            "sigma" => {
                sigmas = SigmaParams {
                    sigma_a: unhex(tok.next().context("sigma_a")?)?,
                    sigma_e: unhex(tok.next().context("sigma_e")?)?,
                    mu_e: unhex(tok.next().context("mu_e")?)?,
                    sigma_r_frac: unhex(tok.next().context("sigma_r_frac")?)?,
                };
            }
            "c_svm" => c_svm = unhex(tok.next().context("c_svm")?)?,
            "hog" => {
                hog = HogParams {
                    template: tok.next().context("template")?.parse()?,
                    cell_px: tok.next().context("cell")?.parse()?,
                    bins: tok.next().context("bins")?.parse()?,
                };
            }
            "app_dim" => app_dim = tok.next().context("app_dim")?.parse()?,
            "blocks" => {
                let count: usize = tok.next().context("block count")?.parse()?;
                for _ in 0..count {
                    let line = next()?.trim();
                    let mut t = line.split_whitespace();
                    if t.next() != Some("block") {
                        bail!("expected block record, got: {line}");
                    }
                    stored_blocks.push((
                        t.next().context("block name")?.to_string(),
                        t.next().context("block offset")?.parse()?,
                        t.next().context("block len")?.parse()?,
                    ));
                }
            }
            "coeffs" => {
                let total: usize = tok.next().context("coeff count")?.parse()?;
                while coeffs.len() < total {
                    for token in next()?.trim().split_whitespace() {
                        coeffs.push(unhex(token)?);
                    }
                }
                if coeffs.len() != total {
                    bail!("coefficient count mismatch");
                }
            }
            "detector" => {
                let dim: usize = tok.next().context("detector dim")?.parse()?;
                let bias = unhex(tok.next().context("detector bias")?)?;
                let mut weights = Vec::with_capacity(dim);
                while weights.len() < dim {
                    for token in next()?.trim().split_whitespace() {
                        weights.push(unhex(token)?);
                    }
                }
                if weights.len() != dim {
                    bail!("detector weight count mismatch");
                }
                detector = Some(LogisticModel { weights, bias });
            }
            "refs" => {
                let count: usize = tok.next().context("ref count")?.parse()?;
                for _ in 0..count {
                    let line = next()?.trim();
                    let mut t = line.split_whitespace();
                    if t.next() != Some("ref") {
                        bail!("expected ref record, got: {line}");
                    }
                    let w = unhex(t.next().context("ref w")?)?;
                    let h = unhex(t.next().context("ref h")?)?;
                    let d = unhex(t.next().context("ref d")?)?;
                    refs.push(w, h, d)?;
                }
            }
            "converged" => converged = tok.next().context("converged")? == "1",
            "END" => break,
            other => bail!("unknown weight-file tag {other}"),
        }
    }
    let config = HierarchyConfig {
        azimuth_bins,
        layers,
        subcategories,
        sample_counts,
        sigmas,
        c_svm,
        hog,
        app_dim,
        registry: CadRegistry::default(),
    };
    let hash = config_hash.context("missing config_hash")?;
    if config.structure_hash() != hash {
        bail!(
            "configuration hash mismatch: file says {hash:016x}, reconstructed {:016x}",
            config.structure_hash()
        );
    }
    let layout = WeightLayout::new(&config);
    let expected: Vec<(String, usize, usize)> = layout.blocks().to_vec();
    if stored_blocks != expected {
        bail!("block table does not match the configuration's layout");
    }
    let weights = WeightVector::from_values(&layout, hash, coeffs)?;
    Ok(StoredModel {
        config,
        weights,
        detector: detector.context("missing detector section")?,
        refs,
        converged,
    })
}

pub fn save_model(path: &Path, model: &StoredModel) -> Result<()> {
    fs::write(path, serialize_model(model)).with_context(|| format!("writing {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<StoredModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}
