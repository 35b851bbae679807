use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Triangle mesh for one finer-sub-category (or a merged sub-category model).
///
/// Vertices are in object units; after [`normalize_mesh`] the centroid is at
/// the origin and the bounding-box diagonal is 1. Orientation is a dataset
/// convention and is never altered.
#[derive(Debug, Clone, PartialEq)]
pub struct CadModel {
    pub id: String,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl CadModel {
    pub fn new(id: impl Into<String>, vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let model = CadModel { id: id.into(), vertices, faces };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::DegenerateMesh("fewer than 3 vertices".into()));
        }
        for (i, face) in self.faces.iter().enumerate() {
            for &idx in face {
                if idx as usize >= self.vertices.len() {
                    return Err(Error::InvalidFaceIndex {
                        face: i,
                        index: idx,
                        vertices: self.vertices.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Vertex mean.
    pub fn vertex_mean(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for k in 0..3 {
                c[k] += v[k];
            }
        }
        let n = self.vertices.len() as f64;
        [c[0] / n, c[1] / n, c[2] / n]
    }

    /// Center of the bounding box — the centroid used by normalization.
    pub fn bounding_box_center(&self) -> [f64; 3] {
        let (lo, hi) = self.bounding_box();
        [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0]
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        let mut d2 = 0.0;
        for k in 0..3 {
            d2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
        }
        d2.sqrt()
    }
}

/// Translate the centroid (bounding-box center) to the origin and scale the
/// bounding-box diagonal to 1. Centering on the box rather than the vertex
/// mean keeps the silhouette extents balanced around the projection center,
/// so a zero occlusion translation starts aligned regardless of where the
/// vertex density sits. Orientation is untouched; a mesh with zero extent is
/// rejected.
pub fn normalize_mesh(model: &CadModel) -> Result<CadModel> {
    model.validate()?;
    let diag = model.bounding_box_diagonal();
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(Error::DegenerateMesh("zero spatial extent".into()));
    }
    let c = model.bounding_box_center();
    let vertices = model
        .vertices
        .iter()
        .map(|v| [(v[0] - c[0]) / diag, (v[1] - c[1]) / diag, (v[2] - c[2]) / diag])
        .collect();
    Ok(CadModel { id: model.id.clone(), vertices, faces: model.faces.clone() })
}

/// Axis-aligned cuboid helper, mostly for tests and procedural shapes.
pub(crate) fn cuboid(id: &str, center: [f64; 3], half: [f64; 3]) -> CadModel {
    let mut vertices = Vec::with_capacity(8);
    for &dz in &[-1.0, 1.0] {
        for &dy in &[-1.0, 1.0] {
            for &dx in &[-1.0, 1.0] {
                vertices.push([
                    center[0] + dx * half[0],
                    center[1] + dy * half[1],
                    center[2] + dz * half[2],
                ]);
            }
        }
    }
    // 12 triangles, two per cuboid face.
    let faces = alloc::vec![
        [0, 1, 3], [0, 3, 2],       // z = -1
        [4, 7, 5], [4, 6, 7],       // z = +1
        [0, 4, 5], [0, 5, 1],       // y = -1
        [2, 3, 7], [2, 7, 6],       // y = +1
        [0, 2, 6], [0, 6, 4],       // x = -1
        [1, 5, 7], [1, 7, 3],       // x = +1
    ];
    CadModel { id: String::from(id), vertices, faces }
}
