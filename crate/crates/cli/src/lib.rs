//! File formats, pipeline drivers, and overlay rendering for the
//! coarse-to-fine hierarchy. The algorithms live in `hierdet-core`; this
//! crate owns everything that touches the filesystem.

pub mod formats;
pub mod overlay;
pub mod pipeline;
pub mod report;
