//! ASCII OBJ subset: `v` and `f` directives only, 1-based indices, polygons
//! fan-split into triangles on load.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hierdet_core::geometry::CadModel;

pub fn write_obj(path: &Path, model: &CadModel) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", model.id));
    for v in &model.vertices {
        out.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
    }
    for f in &model.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_obj(path: &Path, id: &str) -> Result<CadModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_obj(&text, id).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse_obj(text: &str, id: &str) -> Result<CadModel> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = tokens
                        .next()
                        .ok_or_else(|| anyhow::anyhow!("line {}: short v record", lineno + 1))?
                        .parse()
                        .with_context(|| format!("line {}: bad coordinate", lineno + 1))?;
                }
                vertices.push(coords);
            }
            Some("f") => {
                let idx: Vec<u32> = tokens
                    .map(|t| -> Result<u32> {
                        let i: i64 = t
                            .parse()
                            .with_context(|| format!("line {}: bad face index", lineno + 1))?;
                        if i < 1 {
                            bail!("line {}: face indices are 1-based", lineno + 1);
                        }
                        Ok((i - 1) as u32)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    bail!("line {}: face needs at least 3 vertices", lineno + 1);
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            Some(other) => bail!("line {}: unsupported directive {other}", lineno + 1),
            None => {}
        }
    }
    Ok(CadModel::new(id, vertices, faces)?)
}
