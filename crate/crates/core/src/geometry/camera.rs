use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
#[allow(unused_imports)]
use num_traits::Float;

use super::mesh::CadModel;
use crate::{Error, Result};

/// Minimum camera-space depth; a vertex closer than this crosses the image
/// plane for our purposes.
const NEAR: f64 = 1e-2;

/// Camera placement on a sphere around a normalized model.
///
/// The camera sits at spherical coordinates (azimuth, elevation) at the given
/// distance, looks at the origin, and has zero roll (the in-plane rotation of
/// the hierarchy is fixed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    azimuth: f64,
    elevation: f64,
    distance: f64,
}

impl CameraPose {
    /// Azimuth is wrapped into `[0, 2π)`; elevation must lie in `[0, π/2]`
    /// and distance must be strictly positive.
    pub fn new(azimuth: f64, elevation: f64, distance: f64) -> Result<Self> {
        if !azimuth.is_finite() {
            return Err(Error::InvalidPose("non-finite azimuth".into()));
        }
        if !(0.0..=FRAC_PI_2).contains(&elevation) {
            return Err(Error::InvalidPose("elevation outside [0, pi/2]".into()));
        }
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(Error::InvalidPose("distance must be positive".into()));
        }
        let mut a = azimuth % (2.0 * PI);
        if a < 0.0 {
            a += 2.0 * PI;
        }
        // The remainder can land exactly on 2π for inputs just below a
        // multiple of it.
        if a >= 2.0 * PI {
            a = 0.0;
        }
        Ok(CameraPose { azimuth: a, elevation, distance })
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Camera position in world coordinates (z up).
    pub fn eye(&self) -> [f64; 3] {
        let (a, e, d) = (self.azimuth, self.elevation, self.distance);
        [d * e.cos() * a.cos(), d * e.cos() * a.sin(), d * e.sin()]
    }

    /// Orthonormal (right, up, forward) frame of the camera.
    pub fn frame(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let eye = self.eye();
        let d = self.distance;
        let fwd = [-eye[0] / d, -eye[1] / d, -eye[2] / d];
        // right = normalize(forward × world_up) with world_up = +z; at the
        // pole this degenerates and we use the analytic limit.
        let norm = (fwd[0] * fwd[0] + fwd[1] * fwd[1]).sqrt();
        let right = if norm > 1e-9 {
            [fwd[1] / norm, -fwd[0] / norm, 0.0]
        } else {
            [-self.azimuth.sin(), self.azimuth.cos(), 0.0]
        };
        let up = [
            right[1] * fwd[2] - right[2] * fwd[1],
            right[2] * fwd[0] - right[0] * fwd[2],
            right[0] * fwd[1] - right[1] * fwd[0],
        ];
        // up = right × fwd points opposite the image v axis.
        (right, [-up[0], -up[1], -up[2]], fwd)
    }
}

/// Pinhole intrinsics: focal length in pixels and a viewport whose center is
/// the principal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub focal_px: f64,
    pub viewport_w: u32,
    pub viewport_h: u32,
}

impl Camera {
    /// The standard camera for a viewport: the focal length is chosen so a
    /// unit-diagonal object at distance 3 spans half the viewport's smaller
    /// side.
    pub fn standard(viewport_w: u32, viewport_h: u32) -> Self {
        Camera {
            focal_px: 1.5 * viewport_w.min(viewport_h) as f64,
            viewport_w,
            viewport_h,
        }
    }

    /// Same focal convention, but computed from another frame (used to render
    /// into region-sized viewports with the full image's optics).
    pub fn with_focal_of(frame_w: u32, frame_h: u32, viewport_w: u32, viewport_h: u32) -> Self {
        Camera {
            focal_px: 1.5 * frame_w.min(frame_h) as f64,
            viewport_w,
            viewport_h,
        }
    }
}

/// Project the model's vertices to continuous pixel coordinates together with
/// their camera-space depths.
///
/// Errors when any vertex comes closer to the camera plane than a small
/// epsilon (the model crosses the image plane).
pub fn project_points(
    model: &CadModel,
    pose: &CameraPose,
    camera: &Camera,
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let eye = pose.eye();
    let (right, vdir, fwd) = pose.frame();
    let cx = camera.viewport_w as f64 / 2.0;
    let cy = camera.viewport_h as f64 / 2.0;
    let mut pts = Vec::with_capacity(model.vertices.len());
    let mut depths = Vec::with_capacity(model.vertices.len());
    for v in &model.vertices {
        let rel = [v[0] - eye[0], v[1] - eye[1], v[2] - eye[2]];
        let z = rel[0] * fwd[0] + rel[1] * fwd[1] + rel[2] * fwd[2];
        if z < NEAR {
            return Err(Error::MeshCrossesImagePlane { min_depth: z });
        }
        let x = rel[0] * right[0] + rel[1] * right[1] + rel[2] * right[2];
        let y = rel[0] * vdir[0] + rel[1] * vdir[1] + rel[2] * vdir[2];
        pts.push([cx + camera.focal_px * x / z, cy + camera.focal_px * y / z]);
        depths.push(z);
    }
    Ok((pts, depths))
}
