//! Shape and texture descriptors built from edge direction matrices (EDMS)
//! and local binary patterns (LBP), together with the GLCM and Hu-moment
//! baselines, two classifiers plus a nearest-neighbour reference, and a
//! repeated-holdout evaluation harness.
//!
//! The pipeline for a single image is
//! decode → grayscale → Otsu binarization → boundary extraction → descriptors,
//! see [`descriptors::extract`].

pub mod classify;
pub mod dataset;
pub mod descriptors;
pub mod edms;
pub mod error;
pub mod eval;
pub mod glcm;
pub mod imaging;
pub mod io;
pub mod lbp;
pub mod moments;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
