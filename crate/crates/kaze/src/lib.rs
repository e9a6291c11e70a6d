//! KAZE feature detection and description.
//!
//! The pipeline has three stages:
//!
//! 1. Build a nonlinear scale space of the input image with Fast Explicit
//!    Diffusion steps of the Perona-Malik equation ([`scale_space`]).
//! 2. Detect keypoints as scale-space extrema of the normalized Hessian
//!    determinant, with edge rejection and sub-pixel refinement ([`detector`]).
//! 3. Assign a dominant orientation and compute a 64-dimensional unit-norm
//!    M-SURF descriptor per keypoint ([`descriptor`]).
//!
//! A brute-force ratio-test matcher ([`matcher`]) closes the loop for
//! image-to-image correspondence.
//!
//! ```
//! use kaze::image::GrayImage;
//! use kaze::scale_space::{build_scale_space, ScaleSpaceOptions};
//! use kaze::detector::detect;
//! use kaze::descriptor::describe;
//!
//! // A small synthetic image with a single dark blob.
//! let img = GrayImage::from_fn(64, 64, |x, y| {
//!     let (dx, dy) = (x as f32 - 32.0, y as f32 - 32.0);
//!     1.0 - 0.8 * (-(dx * dx + dy * dy) / 18.0).exp()
//! });
//! let opts = ScaleSpaceOptions::default();
//! let mut levels = build_scale_space(&img, &opts).unwrap();
//! let mut keypoints = detect(&mut levels, &opts).unwrap();
//! let descriptors = describe(&levels, &mut keypoints);
//! assert_eq!(keypoints.len(), descriptors.len());
//! ```

pub mod descriptor;
pub mod detector;
pub mod image;
pub mod matcher;
pub mod scale_space;

pub use crate::descriptor::{describe, Descriptor};
pub use crate::detector::{detect, KeyPoint};
pub use crate::image::GrayImage;
pub use crate::matcher::{match_descriptors, Match};
pub use crate::scale_space::{build_scale_space, EvolutionLevel, ScaleSpaceOptions};

/// Errors reported by pipeline operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// Code blocks in the book double as doctests so the guide cannot drift
// from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/index.md")]
    mod index {}
    #[doc = include_str!("../../../book/src/scale-space.md")]
    mod scale_space {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/description.md")]
    mod description {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
}
