//! Triangle meshes, the spherical pinhole camera, silhouette rasterization,
//! and voxel-based CAD merging.

mod camera;
mod mesh;
mod raster;
mod voxel;

pub use camera::{Camera, CameraPose, project_points};
pub use mesh::{normalize_mesh, CadModel};
pub use raster::{project_mesh, render_shaded, render_silhouette, ShadedRender, SilhouetteMask};
pub use voxel::{merge_cad_models, merged_voxel_grid, voxelize, VoxelGrid};

pub(crate) use mesh::cuboid;

#[cfg(test)]
pub(crate) fn mesh_for_tests() -> CadModel {
    mesh::cuboid("test-cuboid", [0.0; 3], [0.5, 0.3, 0.2])
}
