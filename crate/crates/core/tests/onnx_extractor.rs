#![cfg(feature = "onnx")]

use std::path::PathBuf;

use spheremetric::features::{build_extractor, extract, ExtractorChoice, FeatureExtractor, OnnxExtractor};
use spheremetric::Image;

const W: [[f64; 3]; 4] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, -0.25, 2.0]];
const B: [f64; 4] = [0.0, 0.0, 0.0, 0.125];

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pool_linear.onnx")
}

fn expected(rgb: [f64; 3]) -> Vec<f64> {
    let m = rgb.map(|v| v / 127.5 - 1.0);
    (0..4)
        .map(|k| (0..3).map(|c| W[k][c] * m[c]).sum::<f64>() + B[k])
        .collect()
}

#[test]
fn constant_images_match_closed_form() {
    let ex = OnnxExtractor::load(&fixture()).unwrap();
    assert_eq!(ex.dim(), 4);
    assert!(ex.name().starts_with("inception-onnx-"));
    let colours = [[0.0, 0.0, 0.0], [255.0, 255.0, 255.0], [10.0, 200.0, 90.0], [127.5, 3.0, 250.0]];
    let images: Vec<Image> = colours.iter().map(|&c| Image::filled(64, 32, c)).collect();
    let refs: Vec<&Image> = images.iter().collect();
    let feats = extract(&refs, &ex).unwrap();
    // the graph pools 299*299 values in f32
    let tol = (299.0 * 299.0) * f64::from(f32::EPSILON) * 2.5;
    for (f, c) in feats.iter().zip(colours) {
        for (got, want) in f.as_slice().iter().zip(expected(c)) {
            assert!((got - want).abs() < tol, "{got} vs {want} for {c:?}");
        }
    }
}

#[test]
fn deterministic_and_order_preserving() {
    let ex = build_extractor(ExtractorChoice::InceptionOnnx, Some(&fixture())).unwrap();
    let images: Vec<Image> = (0..5)
        .map(|i| Image::from_fn(80, 40, move |x, y| [(x * 3 + i * 40) as f64 % 256.0, (y * 5) as f64, 30.0 * i as f64]))
        .collect();
    let refs: Vec<&Image> = images.iter().collect();
    let a = extract(&refs, &ex).unwrap();
    let b = extract(&refs, &ex).unwrap();
    assert_eq!(a, b);
    let single = extract(&refs[3..4], &ex).unwrap();
    assert_eq!(single[0], a[3]);
}

#[test]
fn missing_or_invalid_model_is_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.onnx");
    std::fs::write(&bogus, b"not a model").unwrap();
    for p in [dir.path().join("absent.onnx"), bogus] {
        let err = OnnxExtractor::load(&p).err().expect("load must fail");
        assert_eq!(err.kind(), spheremetric::ErrorKind::Backend);
    }
}
