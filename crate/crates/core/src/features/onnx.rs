use std::path::Path;

use sha2::{Digest, Sha256};
use tract_onnx::prelude::*;

use super::{par_map_images, preprocess, FeatureExtractor, FeatureVector, PreprocessSpec, INCEPTION_INPUT_SIZE};
use crate::error::{Error, Result};
use crate::image::Image;

type Plan = TypedSimplePlan<TypedModel>;

/// Inception-V3 pool features from an ONNX graph taking one
/// `1x3x299x299` float input in `[-1, 1]`. The output is flattened, so
/// both `1x2048` and `1x2048x1x1` heads work.
pub struct OnnxExtractor {
    plan: Plan,
    name: String,
    dim: usize,
}

fn backend(path: &Path) -> impl Fn(TractError) -> Error + '_ {
    move |e| Error::Backend(format!("{}: {e:#}", path.display()))
}

impl OnnxExtractor {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Backend(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let n = INCEPTION_INPUT_SIZE;
        let plan = tract_onnx::onnx()
            .model_for_read(&mut bytes.as_slice())
            .and_then(|m| m.with_input_fact(0, f32::fact([1, 3, n, n]).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(backend(path))?;
        let shape = plan
            .model()
            .output_fact(0)
            .map_err(backend(path))?
            .shape
            .as_concrete()
            .map(<[usize]>::to_vec)
            .ok_or_else(|| Error::Backend(format!("{}: output shape is not fixed", path.display())))?;
        if shape.first() != Some(&1) {
            return Err(Error::Backend(format!(
                "{}: expected a batch-1 output, got {shape:?}",
                path.display()
            )));
        }
        let dim = shape.iter().product();
        let tag: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        log::info!("loaded {} ({dim}-d output, sha256 {tag}...)", path.display());
        Ok(OnnxExtractor {
            plan,
            name: format!("inception-onnx-{tag}"),
            dim,
        })
    }

    fn run_one(&self, img: &Image) -> Result<FeatureVector> {
        let input = preprocess(img)?;
        let tensor = Tensor::from_shape(&[1, input.channels, input.height, input.width], &input.data)
            .map_err(|e| Error::Backend(format!("{e:#}")))?;
        let out = self
            .plan
            .run(tvec!(tensor.into()))
            .map_err(|e| Error::Backend(format!("{}: {e:#}", self.name)))?;
        let view = out[0]
            .to_array_view::<f32>()
            .map_err(|e| Error::Backend(format!("{}: {e:#}", self.name)))?;
        FeatureVector::new(view.iter().map(|&v| f64::from(v)).collect())
    }
}

impl FeatureExtractor for OnnxExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn preprocessing(&self) -> PreprocessSpec {
        PreprocessSpec::inception()
    }

    fn extract_batch(&self, images: &[&Image]) -> Result<Vec<FeatureVector>> {
        par_map_images(images, |img| self.run_one(img))
    }
}
