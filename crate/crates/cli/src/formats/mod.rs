//! On-disk formats. All text formats print floats with Rust's shortest
//! round-trip notation, so save → load is value-exact; the weight container
//! stores coefficients as hexadecimal bit patterns and round-trips
//! bit-exactly.

pub mod detections;
pub mod features;
pub mod manifest;
pub mod obj;
pub mod pgm;
pub mod voxeltext;
pub mod weights;
