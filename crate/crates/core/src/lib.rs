//! Geometry-aware fidelity metrics for spherical (360°) images.
//!
//! * [`projection`]: equirectangular <-> tangential cubemap conversion.
//! * [`corruption`]: field-of-view reduction, noise, blur and seam cropping.
//! * [`features`]: pluggable deep-feature extractors (ONNX or a mock).
//! * [`frechet`]: Gaussian fits, FID, and the cubemap-grouped OmniFID.
//! * [`discontinuity`]: the seam Discontinuity Score.
//! * [`dataset`]: directory scanning, loading and feature caching.
//! * [`synth`]: deterministic synthetic panoramas for tests and demos.

pub mod corruption;
pub mod dataset;
pub mod discontinuity;
pub mod error;
pub mod features;
pub mod frechet;
pub mod image;
pub mod projection;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use image::{EquirectImage, Image};
