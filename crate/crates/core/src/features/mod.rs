//! HOG descriptors and the pluggable local-appearance providers.

mod appearance;
mod hog;

pub use appearance::{
    AppearanceProvider, AppearanceVector, FilterBankProvider, PrecomputedProvider,
};
pub use hog::{compute_hog, contour_hog, HogDescriptor, HogParams};
