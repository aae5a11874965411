//! Gaussian fits to feature sets, the Fréchet (Wasserstein-2) distance
//! between them, and the cubemap-grouped OmniFID.
//!
//! The mean term is the *squared* Euclidean distance, as in the standard
//! FID definition.

mod io;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, FeatureExtractor, FeatureVector};
use crate::image::Image;
use crate::projection::{project, FaceLabel, ProjectionConfig};

pub use io::{decode_stats, encode_stats, read_stats, write_stats, StatsFile, StatsProvenance, STATS_FORMAT_VERSION};

/// Sample count below which FID estimates are flagged as biased.
pub const DEFAULT_SAMPLE_FLOOR: usize = 2048;

const SYMMETRY_TOL: f64 = 1e-9;
const EIGEN_CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub sample_count: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (n - 1) covariance, symmetrized.
pub fn estimate_gaussian(features: &[FeatureVector]) -> Result<GaussianStats> {
    let refs: Vec<&FeatureVector> = features.iter().collect();
    estimate_gaussian_refs(&refs)
}

pub fn estimate_gaussian_refs(features: &[&FeatureVector]) -> Result<GaussianStats> {
    let n = features.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: n,
        });
    }
    let d = features[0].dim();
    if let Some(bad) = features.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let mut mean = DVector::zeros(d);
    for f in features {
        for (m, v) in mean.iter_mut().zip(f.as_slice()) {
            *m += v;
        }
    }
    mean /= n as f64;
    let centered = DMatrix::from_fn(n, d, |i, j| features[i].as_slice()[j] - mean[j]);
    let mut cov = centered.transpose() * &centered;
    cov /= (n - 1) as f64;
    let covariance = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianStats {
        mean,
        covariance,
        sample_count: n,
    })
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::input(format!(
            "covariance must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("covariance has non-finite entries".into()));
    }
    let scale = m.amax();
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NonSymmetric { asymmetry, scale });
    }
    Ok(())
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let d = m.nrows();
    let norm = m.norm();
    SymmetricEigen::try_new(m, f64::EPSILON, 1000 + 100 * d).ok_or_else(|| {
        Error::Numeric(format!(
            "symmetric eigensolver did not converge (dim {d}, Frobenius norm {norm:e})"
        ))
    })
}

/// Eigenvalues clamped at zero; anything below `-1e-8 * max` is an error.
fn clamp_psd(values: &DVector<f64>) -> Result<DVector<f64>> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_CLAMP_TOL * max {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    Ok(values.map(|v| v.max(0.0)))
}

/// Symmetric PSD square root via eigendecomposition.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let eig = eigen(m.clone())?;
    let roots = clamp_psd(&eig.eigenvalues)?.map(f64::sqrt);
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&roots);
    let s = scaled * v.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// `tr((S1 S2)^(1/2))`, computed as the sum of square roots of the
/// eigenvalues of the symmetric product `S1^(1/2) S2 S1^(1/2)`.
pub fn trace_sqrt_product(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    if s1.shape() != s2.shape() {
        return Err(Error::DimensionMismatch {
            expected: s1.nrows(),
            found: s2.nrows(),
        });
    }
    check_symmetric(s2)?;
    let root = sqrtm_psd(s1)?;
    let m = &root * s2 * &root;
    let m = (&m + m.transpose()) * 0.5;
    let eig = eigen(m)?;
    Ok(clamp_psd(&eig.eigenvalues)?.iter().map(|v| v.sqrt()).sum())
}

/// Wasserstein-2 distance between two Gaussians:
/// `|mu1 - mu2|^2 + tr(S1) + tr(S2) - 2 tr((S1 S2)^(1/2))`.
pub fn frechet_distance(g1: &GaussianStats, g2: &GaussianStats) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    if g1.mean == g2.mean && g1.covariance == g2.covariance {
        return Ok(0.0);
    }
    let mean_term = (&g1.mean - &g2.mean).norm_squared();
    let (t1, t2) = (g1.covariance.trace(), g2.covariance.trace());
    let cross = trace_sqrt_product(&g1.covariance, &g2.covariance)?;
    let d = mean_term + t1 + t2 - 2.0 * cross;
    let tol = 1e-8 * (t1 + t2 + mean_term) + 1e-12;
    if d < -tol {
        return Err(Error::Numeric(format!(
            "Fréchet distance came out negative ({d:e}; traces {t1:e}, {t2:e})"
        )));
    }
    Ok(d.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewGroup {
    Frontal,
    Up,
    Down,
}

impl ViewGroup {
    pub const ALL: [ViewGroup; 3] = [ViewGroup::Frontal, ViewGroup::Up, ViewGroup::Down];

    pub fn of(face: FaceLabel) -> ViewGroup {
        match face {
            FaceLabel::U => ViewGroup::Up,
            FaceLabel::D => ViewGroup::Down,
            _ => ViewGroup::Frontal,
        }
    }

    pub fn faces(self) -> &'static [FaceLabel] {
        match self {
            ViewGroup::Frontal => &[FaceLabel::F, FaceLabel::R, FaceLabel::B, FaceLabel::L],
            ViewGroup::Up => &[FaceLabel::U],
            ViewGroup::Down => &[FaceLabel::D],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewGroup::Frontal => "frontal",
            ViewGroup::Up => "up",
            ViewGroup::Down => "down",
        }
    }
}

/// Per-cubemap features averaged within each view group, indexed like
/// [`ViewGroup::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedFeatures(pub [FeatureVector; 3]);

impl GroupedFeatures {
    pub fn get(&self, group: ViewGroup) -> &FeatureVector {
        &self.0[group as usize]
    }
}

pub fn group_features(faces: &BTreeMap<FaceLabel, FeatureVector>) -> Result<GroupedFeatures> {
    let lookup = |f: &FaceLabel| {
        faces
            .get(f)
            .ok_or_else(|| Error::input(format!("cubemap features lack face {f}")))
    };
    let group = |g: ViewGroup| -> Result<FeatureVector> {
        let members = g.faces().iter().map(lookup).collect::<Result<Vec<_>>>()?;
        FeatureVector::mean_of(&members)
    };
    Ok(GroupedFeatures([
        group(ViewGroup::Frontal)?,
        group(ViewGroup::Up)?,
        group(ViewGroup::Down)?,
    ]))
}

/// Groups six face vectors given in [`FaceLabel::ALL`] order.
pub fn group_face_array(faces: &[FeatureVector; 6]) -> Result<GroupedFeatures> {
    let map = FaceLabel::ALL.iter().copied().zip(faces.iter().cloned()).collect();
    group_features(&map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub frontal: f64,
    pub up: f64,
    pub down: f64,
}

impl GroupScores {
    pub fn get(&self, g: ViewGroup) -> f64 {
        match g {
            ViewGroup::Frontal => self.frontal,
            ViewGroup::Up => self.up,
            ViewGroup::Down => self.down,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.frontal + self.up + self.down) / 3.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmniFidReport {
    pub fid_bar: GroupScores,
    pub omnifid: f64,
    pub sample_counts: (usize, usize),
    pub warnings: Vec<String>,
}

/// Bias warnings for sample counts under `floor`.
pub fn sample_size_warnings(counts: &[usize], floor: usize) -> Vec<String> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n < floor)
        .map(|(i, n)| {
            format!(
                "set {} has {n} samples (< {floor}); FID-type scores are biased upwards at small sample sizes",
                i + 1
            )
        })
        .collect()
}

pub fn fid_from_features(a: &[FeatureVector], b: &[FeatureVector]) -> Result<f64> {
    frechet_distance(&estimate_gaussian(a)?, &estimate_gaussian(b)?)
}

/// FID between two image sets on whole-image features.
pub fn fid(set_a: &[Image], set_b: &[Image], extractor: &dyn FeatureExtractor) -> Result<f64> {
    for set in [set_a, set_b] {
        if set.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                found: set.len(),
            });
        }
    }
    let fa = extract(&set_a.iter().collect::<Vec<_>>(), extractor)?;
    let fb = extract(&set_b.iter().collect::<Vec<_>>(), extractor)?;
    for w in sample_size_warnings(&[fa.len(), fb.len()], DEFAULT_SAMPLE_FLOOR) {
        log::warn!("{w}");
    }
    fid_from_features(&fa, &fb)
}

/// Gaussian fits of the group vectors, indexed like [`ViewGroup::ALL`].
pub fn group_stats(grouped: &[GroupedFeatures]) -> Result<[GaussianStats; 3]> {
    let fit = |g: ViewGroup| estimate_gaussian_refs(&grouped.iter().map(|x| x.get(g)).collect::<Vec<_>>());
    Ok([
        fit(ViewGroup::Frontal)?,
        fit(ViewGroup::Up)?,
        fit(ViewGroup::Down)?,
    ])
}

pub fn omnifid_from_stats(a: &[GaussianStats; 3], b: &[GaussianStats; 3]) -> Result<OmniFidReport> {
    let fid_bar = GroupScores {
        frontal: frechet_distance(&a[0], &b[0])?,
        up: frechet_distance(&a[1], &b[1])?,
        down: frechet_distance(&a[2], &b[2])?,
    };
    let counts = (a[0].sample_count, b[0].sample_count);
    Ok(OmniFidReport {
        omnifid: fid_bar.mean(),
        fid_bar,
        sample_counts: counts,
        warnings: sample_size_warnings(&[counts.0, counts.1], DEFAULT_SAMPLE_FLOOR),
    })
}

/// OmniFID from per-cubemap grouped features.
pub fn omnifid_from_grouped(a: &[GroupedFeatures], b: &[GroupedFeatures]) -> Result<OmniFidReport> {
    omnifid_from_stats(&group_stats(a)?, &group_stats(b)?)
}

/// Projects each equirect image to a cubemap, extracts the six face
/// features and averages them per view group.
pub fn cubemap_group_features(
    images: &[Image],
    extractor: &dyn FeatureExtractor,
    projection: &ProjectionConfig,
) -> Result<Vec<GroupedFeatures>> {
    let cubemaps = images
        .par_iter()
        .map(|img| project(img, projection))
        .collect::<Result<Vec<_>>>()?;
    let faces: Vec<&Image> = cubemaps.iter().flat_map(|c| c.faces().iter()).collect();
    let feats = extract(&faces, extractor)?;
    feats
        .chunks_exact(6)
        .map(|six| group_face_array(&six.to_vec().try_into().expect("six faces")))
        .collect()
}

pub fn omnifid(
    set_a: &[Image],
    set_b: &[Image],
    extractor: &dyn FeatureExtractor,
    projection: &ProjectionConfig,
) -> Result<OmniFidReport> {
    for set in [set_a, set_b] {
        if set.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                found: set.len(),
            });
        }
    }
    let ga = cubemap_group_features(set_a, extractor, projection)?;
    let gb = cubemap_group_features(set_b, extractor, projection)?;
    omnifid_from_grouped(&ga, &gb)
}
