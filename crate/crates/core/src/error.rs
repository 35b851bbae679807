use alloc::string::String;
use core::fmt;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mesh has no spatial extent (or too few vertices) to normalize.
    DegenerateMesh(String),
    /// A face index points past the vertex list.
    InvalidFaceIndex { face: usize, index: u32, vertices: usize },
    /// Camera pose outside its legal ranges.
    InvalidPose(String),
    /// The model intersects the camera plane at the requested distance.
    MeshCrossesImagePlane { min_depth: f64 },
    /// Voxel merge kept no cells (merge fraction too high).
    EmptyMerge { threshold: u32, models: usize },
    /// Region is empty or does not satisfy the minimum size for the operation.
    InvalidRegion(String),
    /// A file-backed provider has no entry for the requested key.
    MissingFeature { key: String },
    /// A file-backed detector has no score for the requested key.
    MissingScore { key: String },
    /// Feature vector length disagrees with the configured dimension.
    DimensionMismatch { expected: usize, got: usize, what: &'static str },
    /// Label assignment violates a model invariant.
    InvalidAssignment(crate::model::Violation),
    /// φ_cnt has no entry for the assignment's sub-category / finer id.
    MissingCnt { layer: u8, index: usize },
    /// Particle set empty or every particle failed to render.
    NoUsableParticles,
    /// Distance sampling requires at least one training reference.
    EmptyDistanceReferences,
    /// Configuration is internally inconsistent.
    InvalidConfig(String),
    /// Dataset record failed validation.
    InvalidRecord { line: usize, message: String },
    /// Training set lacks a required ingredient (e.g. a positive example).
    InvalidTrainingSet(String),
    /// Evaluation input missing (e.g. a segmentation mask asset).
    MissingAsset(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateMesh(why) => write!(f, "degenerate mesh: {why}"),
            Error::InvalidFaceIndex { face, index, vertices } => {
                write!(f, "face {face} references vertex {index} of {vertices}")
            }
            Error::InvalidPose(why) => write!(f, "invalid camera pose: {why}"),
            Error::MeshCrossesImagePlane { min_depth } => {
                write!(f, "model crosses the image plane (min depth {min_depth})")
            }
            Error::EmptyMerge { threshold, models } => write!(
                f,
                "voxel merge kept no cells (threshold {threshold} of {models} models)"
            ),
            Error::InvalidRegion(why) => write!(f, "invalid region: {why}"),
            Error::MissingFeature { key } => write!(f, "no precomputed feature for {key}"),
            Error::MissingScore { key } => write!(f, "no precomputed detector score for {key}"),
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "{what}: expected dimension {expected}, got {got}")
            }
            Error::InvalidAssignment(v) => write!(f, "invalid assignment: {v}"),
            Error::MissingCnt { layer, index } => {
                write!(f, "no continuous-viewpoint potential for layer {layer}, label {index}")
            }
            Error::NoUsableParticles => write!(f, "no usable viewpoint particles"),
            Error::EmptyDistanceReferences => write!(f, "distance sampler has no references"),
            Error::InvalidConfig(why) => write!(f, "invalid configuration: {why}"),
            Error::InvalidRecord { line, message } => write!(f, "line {line}: {message}"),
            Error::InvalidTrainingSet(why) => write!(f, "invalid training set: {why}"),
            Error::MissingAsset(what) => write!(f, "missing asset: {what}"),
        }
    }
}

impl core::error::Error for Error {}
