//! Deep features per perspective image.
//!
//! Extractors are immutable once built and must be deterministic. The
//! reference backend runs an Inception-V3 graph from an ONNX file and
//! returns its pooled 2048-d activations; [`MockExtractor`] is a cheap
//! statistics-based stand-in for tests and desk-scale sweeps.

mod mock;
#[cfg(feature = "onnx")]
mod onnx;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::projection::resize;

pub use mock::MockExtractor;
#[cfg(feature = "onnx")]
pub use onnx::OnnxExtractor;

/// Environment variable consulted when no model path is given explicitly.
pub const MODEL_ENV_VAR: &str = "SPHEREMETRIC_MODEL";
pub const INCEPTION_INPUT_SIZE: usize = 299;
pub const INCEPTION_FEATURE_DIM: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("feature vector must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("feature vector has non-finite entries".into()));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Elementwise mean, summed in the given order.
    pub fn mean_of(vectors: &[&FeatureVector]) -> Result<FeatureVector> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::input("cannot average zero feature vectors"))?;
        let d = first.dim();
        let mut acc = vec![0.0; d];
        for v in vectors {
            if v.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.dim(),
                });
            }
            for (a, x) in acc.iter_mut().zip(v.as_slice()) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        Ok(FeatureVector(acc.into_iter().map(|a| a / n).collect()))
    }

    pub fn l2_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// How images are turned into network input. Part of every cache key and
/// report, since absolute FID values depend on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreprocessSpec {
    /// `None` when the extractor consumes images at native size.
    pub target_size: Option<(usize, usize)>,
    pub resample: String,
    /// Affine map of `[0, 255]` onto this range, written `lo..hi`.
    pub value_range: String,
    pub channel_order: String,
}

impl PreprocessSpec {
    pub fn inception() -> Self {
        PreprocessSpec {
            target_size: Some((INCEPTION_INPUT_SIZE, INCEPTION_INPUT_SIZE)),
            resample: "bilinear".into(),
            value_range: "-1..1".into(),
            channel_order: "RGB/NCHW".into(),
        }
    }
}

impl fmt::Display for PreprocessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target_size {
            Some((w, h)) => write!(f, "{}-{w}x{h}", self.resample)?,
            None => write!(f, "{}-native", self.resample)?,
        }
        write!(f, "-{}-{}", self.value_range, self.channel_order)
    }
}

pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn preprocessing(&self) -> PreprocessSpec;

    /// One vector per image, in input order.
    fn extract_batch(&self, images: &[&Image]) -> Result<Vec<FeatureVector>>;

    /// Preferred number of images per backend call.
    fn batch_size(&self) -> usize {
        32
    }
}

impl<T: FeatureExtractor + ?Sized> FeatureExtractor for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn preprocessing(&self) -> PreprocessSpec {
        (**self).preprocessing()
    }
    fn extract_batch(&self, images: &[&Image]) -> Result<Vec<FeatureVector>> {
        (**self).extract_batch(images)
    }
    fn batch_size(&self) -> usize {
        (**self).batch_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorChoice {
    /// Inception-V3 pool features from an ONNX graph.
    #[default]
    InceptionOnnx,
    Mock,
}

impl ExtractorChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractorChoice::InceptionOnnx => "inception-onnx",
            ExtractorChoice::Mock => "mock",
        }
    }
}

impl std::str::FromStr for ExtractorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inception-onnx" | "inception" | "onnx" => Ok(ExtractorChoice::InceptionOnnx),
            "mock" => Ok(ExtractorChoice::Mock),
            _ => Err(Error::config(format!("unknown extractor {s:?} (inception-onnx | mock)"))),
        }
    }
}

/// Explicit path, else [`MODEL_ENV_VAR`].
pub fn resolve_model_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(MODEL_ENV_VAR).filter(|v| !v.is_empty()).map(PathBuf::from))
}

pub fn build_extractor(
    choice: ExtractorChoice,
    model_path: Option<&Path>,
) -> Result<Box<dyn FeatureExtractor>> {
    match choice {
        ExtractorChoice::Mock => Ok(Box::new(MockExtractor::new())),
        ExtractorChoice::InceptionOnnx => {
            let path = resolve_model_path(model_path).ok_or_else(|| {
                Error::Backend(format!(
                    "no model given: pass --model-path or set {MODEL_ENV_VAR} to an Inception-V3 ONNX file"
                ))
            })?;
            build_onnx(&path)
        }
    }
}

#[cfg(feature = "onnx")]
fn build_onnx(path: &Path) -> Result<Box<dyn FeatureExtractor>> {
    Ok(Box::new(OnnxExtractor::load(path)?))
}

#[cfg(not(feature = "onnx"))]
fn build_onnx(path: &Path) -> Result<Box<dyn FeatureExtractor>> {
    Err(Error::Backend(format!(
        "cannot load {}: this build has no ONNX support (enable the `onnx` feature)",
        path.display()
    )))
}

/// Network input in NCHW order for a single image.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInput {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

/// Bilinear resize to 299x299, RGB planes, `[0, 255] -> [-1, 1]`.
pub fn preprocess(img: &Image) -> Result<NetworkInput> {
    img.ensure_rgb()?;
    let n = INCEPTION_INPUT_SIZE;
    let resized = resize(img, n, n)?;
    let mut data = vec![0f32; 3 * n * n];
    for (i, px) in resized.data().chunks_exact(3).enumerate() {
        for (c, v) in px.iter().enumerate() {
            data[c * n * n + i] = (v / 127.5 - 1.0) as f32;
        }
    }
    Ok(NetworkInput {
        channels: 3,
        height: n,
        width: n,
        data,
    })
}

/// Runs `extractor` over `images` in backend-sized chunks and checks every
/// output against the declared dimension.
pub fn extract(images: &[&Image], extractor: &dyn FeatureExtractor) -> Result<Vec<FeatureVector>> {
    if images.is_empty() {
        return Err(Error::input("feature extraction needs at least one image"));
    }
    let chunk = extractor.batch_size().max(1);
    let mut out = Vec::with_capacity(images.len());
    for batch in images.chunks(chunk) {
        let feats = extractor.extract_batch(batch)?;
        if feats.len() != batch.len() {
            return Err(Error::Backend(format!(
                "{} returned {} vectors for {} images",
                extractor.name(),
                feats.len(),
                batch.len()
            )));
        }
        for f in &feats {
            if f.dim() != extractor.dim() {
                return Err(Error::DimensionMismatch {
                    expected: extractor.dim(),
                    found: f.dim(),
                });
            }
        }
        out.extend(feats);
    }
    Ok(out)
}

/// Parallel map helper for extractors whose per-image work is independent.
pub(crate) fn par_map_images(
    images: &[&Image],
    f: impl Fn(&Image) -> Result<FeatureVector> + Sync,
) -> Result<Vec<FeatureVector>> {
    images.par_iter().map(|img| f(img)).collect()
}
