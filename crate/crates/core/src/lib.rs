//! Core algorithms for a three-layer coarse-to-fine hierarchical object model.
//!
//! The model jointly estimates, for a proposal region of an image:
//!
//! * whether the region contains the object of interest,
//! * a discrete azimuth bin and a continuous viewpoint
//!   (azimuth, elevation, distance, occlusion translation),
//! * a sub-category and a finer-sub-category.
//!
//! Each layer of the hierarchy scores the region with HOG templates, local
//! appearance features, and a CAD-contour alignment term that is maximized
//! over a particle set of continuous viewpoints anchored to the discrete
//! azimuth bin. The total energy is linear in a blocked weight vector, which
//! is learned with a 1-slack cutting-plane structured SVM.
//!
//! This crate is `no_std` (with `alloc`); all types are in-memory values and
//! all operations are deterministic given their inputs and explicit seeds.
//! File formats, the command-line interface, and parallel drivers live in the
//! companion `hierdet` crate.

#![no_std]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod image;
pub mod inference;
pub mod learning;
pub mod model;
pub mod potentials;
pub mod rng;
pub mod sampling;
pub mod synth;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
