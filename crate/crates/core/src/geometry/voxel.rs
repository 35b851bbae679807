//! Vertex-based voxelization and the coarse-CAD merge.
//!
//! Normalized models share a fixed grid over the unit cube `[-0.5, 0.5]^3`;
//! each model increments a cell's count at most once (a model occupies a cell
//! when at least one of its vertices falls into it). Merging keeps the cells
//! reached by at least `ceil(tau * #models)` models and emits their exposed
//! faces as a surface mesh.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::mesh::CadModel;
use crate::{Error, Result};

/// Occupancy grid with per-cell source-model counts.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    resolution: u32,
    threshold: u32,
    counts: Vec<u32>,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    fn from_counts(resolution: u32, threshold: u32, counts: Vec<u32>) -> Self {
        let occupancy = counts.iter().map(|&c| c >= threshold).collect();
        VoxelGrid { resolution, threshold, counts, occupancy }
    }

    /// Rebuild a grid from a list of occupied cells (count 1, threshold 1);
    /// the inverse of [`VoxelGrid::occupied_cells`] up to counts.
    pub fn from_occupied_cells(resolution: u32, cells: &[(u32, u32, u32)]) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidConfig("voxel resolution must be >= 2".into()));
        }
        let mut counts = vec![0u32; (resolution * resolution * resolution) as usize];
        for &(x, y, z) in cells {
            if x >= resolution || y >= resolution || z >= resolution {
                return Err(Error::InvalidConfig("voxel cell outside the grid".into()));
            }
            counts[((z * resolution + y) * resolution + x) as usize] = 1;
        }
        Ok(VoxelGrid::from_counts(resolution, 1, counts))
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    #[inline]
    fn index(&self, x: u32, y: u32, z: u32) -> usize {
        ((z * self.resolution + y) * self.resolution + x) as usize
    }

    pub fn count(&self, x: u32, y: u32, z: u32) -> u32 {
        self.counts[self.index(x, y, z)]
    }

    pub fn occupied(&self, x: u32, y: u32, z: u32) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    pub fn occupied_cells(&self) -> Vec<(u32, u32, u32)> {
        let mut cells = Vec::new();
        for z in 0..self.resolution {
            for y in 0..self.resolution {
                for x in 0..self.resolution {
                    if self.occupied(x, y, z) {
                        cells.push((x, y, z));
                    }
                }
            }
        }
        cells
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }
}

/// Grid cell of a point; coordinates outside the unit cube clamp to the
/// border cells.
fn cell_of(v: &[f64; 3], resolution: u32) -> (u32, u32, u32) {
    let r = resolution as f64;
    let clamp = |x: f64| -> u32 {
        let c = ((x + 0.5) * r).floor();
        (c.max(0.0) as u32).min(resolution - 1)
    };
    (clamp(v[0]), clamp(v[1]), clamp(v[2]))
}

fn model_cells(model: &CadModel, resolution: u32) -> BTreeSet<(u32, u32, u32)> {
    model.vertices.iter().map(|v| cell_of(v, resolution)).collect()
}

/// Voxelize one normalized model. Every cell holding at least one vertex gets
/// count 1 and is occupied.
pub fn voxelize(model: &CadModel, resolution: u32) -> Result<VoxelGrid> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("voxel resolution must be >= 2".into()));
    }
    if model.vertices.is_empty() {
        return Err(Error::DegenerateMesh("no vertices to voxelize".into()));
    }
    let mut counts = vec![0u32; (resolution * resolution * resolution) as usize];
    for (x, y, z) in model_cells(model, resolution) {
        counts[((z * resolution + y) * resolution + x) as usize] = 1;
    }
    Ok(VoxelGrid::from_counts(resolution, 1, counts))
}

/// Superimpose the models on the shared grid and keep cells reached by at
/// least `ceil(tau * #models)` of them.
pub fn merged_voxel_grid(models: &[CadModel], resolution: u32, tau: f64) -> Result<VoxelGrid> {
    if models.is_empty() {
        return Err(Error::InvalidConfig("merge needs at least one model".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidConfig("voxel resolution must be >= 2".into()));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidConfig("merge fraction must lie in (0, 1]".into()));
    }
    let mut counts = vec![0u32; (resolution * resolution * resolution) as usize];
    for model in models {
        if model.vertices.is_empty() {
            return Err(Error::DegenerateMesh("no vertices to voxelize".into()));
        }
        for (x, y, z) in model_cells(model, resolution) {
            counts[((z * resolution + y) * resolution + x) as usize] += 1;
        }
    }
    let threshold = (tau * models.len() as f64).ceil() as u32;
    Ok(VoxelGrid::from_counts(resolution, threshold.max(1), counts))
}

/// Merge the models into a coarse surface mesh of the kept-voxel set.
///
/// Each kept cell contributes its exposed faces (neighbor not kept) as two
/// triangles; vertices are deduplicated on the grid corner lattice. The
/// result's id is derived from the source ids so distinct merges stay
/// distinguishable (render caches key on it). Errors when the kept set is
/// empty (merge fraction too high).
pub fn merge_cad_models(models: &[CadModel], resolution: u32, tau: f64) -> Result<CadModel> {
    let grid = merged_voxel_grid(models, resolution, tau)?;
    let cells = grid.occupied_cells();
    if cells.is_empty() {
        return Err(Error::EmptyMerge { threshold: grid.threshold(), models: models.len() });
    }
    let res = resolution as f64;
    let mut corner_index: BTreeMap<(u32, u32, u32), u32> = BTreeMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut corner = |c: (u32, u32, u32), vertices: &mut Vec<[f64; 3]>| -> u32 {
        *corner_index.entry(c).or_insert_with(|| {
            vertices.push([
                c.0 as f64 / res - 0.5,
                c.1 as f64 / res - 0.5,
                c.2 as f64 / res - 0.5,
            ]);
            (vertices.len() - 1) as u32
        })
    };
    let occupied = |x: i64, y: i64, z: i64| -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && x < resolution as i64
            && y < resolution as i64
            && z < resolution as i64
            && grid.occupied(x as u32, y as u32, z as u32)
    };
    for &(x, y, z) in &cells {
        let (xi, yi, zi) = (x as i64, y as i64, z as i64);
        // (direction, quad corners in lattice coordinates)
        let quads: [((i64, i64, i64), [(u32, u32, u32); 4]); 6] = [
            ((-1, 0, 0), [(x, y, z), (x, y + 1, z), (x, y + 1, z + 1), (x, y, z + 1)]),
            ((1, 0, 0), [(x + 1, y, z), (x + 1, y, z + 1), (x + 1, y + 1, z + 1), (x + 1, y + 1, z)]),
            ((0, -1, 0), [(x, y, z), (x, y, z + 1), (x + 1, y, z + 1), (x + 1, y, z)]),
            ((0, 1, 0), [(x, y + 1, z), (x + 1, y + 1, z), (x + 1, y + 1, z + 1), (x, y + 1, z + 1)]),
            ((0, 0, -1), [(x, y, z), (x + 1, y, z), (x + 1, y + 1, z), (x, y + 1, z)]),
            ((0, 0, 1), [(x, y, z + 1), (x, y + 1, z + 1), (x + 1, y + 1, z + 1), (x + 1, y, z + 1)]),
        ];
        for (dir, quad) in quads {
            if occupied(xi + dir.0, yi + dir.1, zi + dir.2) {
                continue;
            }
            let ids = [
                corner(quad[0], &mut vertices),
                corner(quad[1], &mut vertices),
                corner(quad[2], &mut vertices),
                corner(quad[3], &mut vertices),
            ];
            faces.push([ids[0], ids[1], ids[2]]);
            faces.push([ids[0], ids[2], ids[3]]);
        }
    }
    let mut id = alloc::string::String::from("merged");
    for m in models {
        id.push('+');
        id.push_str(&m.id);
    }
    CadModel::new(id, vertices, faces)
}
