//! Voxel grid text export: a `resolution` line, then one `x y z` line per
//! occupied cell.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hierdet_core::geometry::VoxelGrid;

pub fn serialize_voxels(grid: &VoxelGrid) -> String {
    let mut out = format!("resolution {}\n", grid.resolution());
    for (x, y, z) in grid.occupied_cells() {
        out.push_str(&format!("{x} {y} {z}\n"));
    }
    out
}

pub fn parse_voxels(text: &str) -> Result<VoxelGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().context("empty voxel file")?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("resolution") {
        bail!("voxel file must start with a resolution line");
    }
    let resolution: u32 = tok.next().context("resolution value")?.parse()?;
    let mut cells = Vec::new();
    for (idx, line) in lines {
        let mut tok = line.split_whitespace();
        let mut next = || -> Result<u32> {
            Ok(tok
                .next()
                .with_context(|| format!("line {}: short cell record", idx + 1))?
                .parse()?)
        };
        cells.push((next()?, next()?, next()?));
    }
    Ok(VoxelGrid::from_occupied_cells(resolution, &cells)?)
}

pub fn save_voxels(path: &Path, grid: &VoxelGrid) -> Result<()> {
    fs::write(path, serialize_voxels(grid)).with_context(|| format!("writing {}", path.display()))
}
