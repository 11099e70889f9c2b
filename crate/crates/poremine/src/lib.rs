//! Pore characterization and artifact mining for fibrous-material SEM
//! micrographs.
//!
//! The pipeline turns a calibrated grayscale micrograph into an artifact
//! report in stages: threshold the image into a two-phase pore/fiber mask,
//! extract pores as connected black-pixel clusters, compute per-pore shape
//! descriptors in physical units, drop lower outliers, then cluster the
//! feature space (k-means with elbow selection), project it with PCA, and
//! cross-tabulate clusters against expert artifact labels. Tables are
//! emitted as CSV and figures as SVG, byte-identically for a given seed.
//!
//! Module map:
//! - [`imaging`]: micrograph loading, calibration, Otsu thresholding,
//!   segmentation.
//! - [`morphology`]: connected-component pore extraction, boundary tracing,
//!   moment ellipse fit, convex hull, shape descriptors.
//! - [`filtering`]: dataset assembly, area cutoff, artifact label join.
//! - [`analytics`]: standardization, correlation, k-means, PCA, kernel
//!   density estimation.
//! - [`mining`]: pipeline orchestration and report generation.
//! - [`render`]: SVG figure generation.
//! - [`synth`]: synthetic micrographs and feature blobs with known ground
//!   truth.

pub mod analytics;
pub mod filtering;
pub mod imaging;
pub mod mining;
pub mod morphology;
pub mod render;
pub mod synth;

pub use imaging::{BinaryMask, Micrograph, Phase};
pub use morphology::{Pore, PoreFeatures};
