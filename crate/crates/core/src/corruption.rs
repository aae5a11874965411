//! Controlled degradations of equirectangular images: vertical field-of-view
//! reduction, salt & pepper noise, additive Gaussian noise, Gaussian blur,
//! and cropping at the wrap-around seam.
//!
//! Stochastic operators draw from ChaCha8 keyed by a 64-bit seed and a
//! per-operator stream, so results depend only on (image, parameters, seed).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::projection::resize;

pub const DEFAULT_SALT_PEPPER_LEVELS: [f64; 4] = [0.01, 0.05, 0.1, 0.2];
pub const DEFAULT_GAUSSIAN_NOISE_LEVELS: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
pub const DEFAULT_BLUR_LEVELS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_FOV_LEVELS: [f64; 4] = [10.0, 20.0, 30.0, 40.0];
pub const DEFAULT_SEAM_CROP_FRACTION: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovReductionConfig {
    /// Total vertical field of view removed, in degrees (half at each pole).
    pub v: f64,
    /// Central band, in degrees, that is kept at its original scale.
    pub fixed_band: f64,
}

impl FovReductionConfig {
    pub fn new(v: f64) -> Self {
        FovReductionConfig {
            v,
            fixed_band: 90.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v.is_finite() || self.v < 0.0 {
            return Err(Error::config(format!("FOV reduction must be >= 0, got {}", self.v)));
        }
        if !self.fixed_band.is_finite() || self.fixed_band < 0.0 {
            return Err(Error::config(format!(
                "fixed band must be >= 0, got {}",
                self.fixed_band
            )));
        }
        if self.fixed_band + self.v >= 180.0 {
            return Err(Error::config(format!(
                "fixed band {} plus reduction {} leaves no outer band",
                self.fixed_band, self.v
            )));
        }
        Ok(())
    }
}

/// Removes `v/2` degrees at each pole and stretches what remains of the two
/// outer bands back over their original rows. The central `fixed_band`
/// rows are copied untouched.
pub fn reduce_vertical_fov(img: &Image, cfg: &FovReductionConfig) -> Result<Image> {
    cfg.validate()?;
    let h = img.height();
    let hf = h as f64;
    let band_start = (hf / 2.0 - hf * cfg.fixed_band / 360.0).round() as usize;
    let band_end = h - band_start;
    let crop = (hf * cfg.v / 360.0 - 1e-9).ceil().max(0.0) as usize;
    if crop == 0 {
        return Ok(img.clone());
    }
    if crop >= band_start {
        return Err(Error::config(format!(
            "reducing {} degrees leaves no rows outside the {}-degree band at height {h}",
            cfg.v, cfg.fixed_band
        )));
    }

    let rows = |from: usize, to: usize| -> Image {
        let stride = img.width() * img.channels();
        Image::from_raw(
            img.width(),
            to - from,
            img.channels(),
            img.data()[from * stride..to * stride].to_vec(),
        )
    };
    let top = resize(&rows(crop, band_start), img.width(), band_start)?;
    let bottom = resize(&rows(band_end, h - crop), img.width(), h - band_end)?;

    let mut data = Vec::with_capacity(img.data().len());
    data.extend_from_slice(top.data());
    data.extend_from_slice(rows(band_start, band_end).data());
    data.extend_from_slice(bottom.data());
    Ok(Image::from_raw(img.width(), h, img.channels(), data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    SaltPepper,
    GaussianNoise,
    GaussianBlur,
}

impl NoiseKind {
    pub fn default_levels(self) -> [f64; 4] {
        match self {
            NoiseKind::SaltPepper => DEFAULT_SALT_PEPPER_LEVELS,
            NoiseKind::GaussianNoise => DEFAULT_GAUSSIAN_NOISE_LEVELS,
            NoiseKind::GaussianBlur => DEFAULT_BLUR_LEVELS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::GaussianNoise => "gaussian_noise",
            NoiseKind::GaussianBlur => "gaussian_blur",
        }
    }

    // Stream ids keep operators on disjoint ChaCha streams for the same seed.
    fn stream(self) -> u64 {
        match self {
            NoiseKind::SaltPepper => 1,
            NoiseKind::GaussianNoise => 2,
            NoiseKind::GaussianBlur => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub kind: NoiseKind,
    pub strength: f64,
    pub seed: u64,
}

impl NoiseLevel {
    pub fn apply(&self, img: &Image) -> Result<Image> {
        match self.kind {
            NoiseKind::SaltPepper => salt_pepper(img, self.strength, self.seed),
            NoiseKind::GaussianNoise => gaussian_noise(img, self.strength, self.seed),
            NoiseKind::GaussianBlur => gaussian_blur(img, self.strength),
        }
    }
}

fn rng_for(seed: u64, kind: NoiseKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.stream());
    rng
}

/// Per-image seed derived from a run-wide seed and the image's position in
/// the (sorted) dataset, so corrupting images in any order gives the same
/// bytes.
pub fn image_seed(global_seed: u64, image_index: u64) -> u64 {
    // SplitMix64 finalizer over the combined key
    let mut z = global_seed ^ image_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Each pixel independently becomes black or white (equal odds) with
/// probability `p`.
pub fn salt_pepper(img: &Image, p: f64, seed: u64) -> Result<Image> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("flip probability must be in [0, 1], got {p}")));
    }
    let mut rng = rng_for(seed, NoiseKind::SaltPepper);
    let mut out = img.clone();
    let c = out.channels();
    for px in out.data_mut().chunks_exact_mut(c) {
        // two draws per pixel regardless of outcome keep the stream aligned across p
        let flip: f64 = rng.random();
        let white: bool = rng.random();
        if flip < p {
            px.fill(if white { 255.0 } else { 0.0 });
        }
    }
    Ok(out)
}

/// Adds i.i.d. N(0, sigma^2) to every channel value, then clamps to `[0, 255]`.
pub fn gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::config(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = rng_for(seed, NoiseKind::GaussianNoise);
    let mut out = img.clone();
    for v in out.data_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = (*v + sigma * z).clamp(0.0, 255.0);
    }
    Ok(out)
}

/// Normalized discrete Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable Gaussian blur. Columns wrap around (the image is a panorama),
/// rows are clamped at the poles.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::config(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h, c) = (img.width(), img.height(), img.channels());

    let mut horiz = vec![0.0; img.data().len()];
    horiz
        .par_chunks_mut(w * c)
        .enumerate()
        .for_each(|(y, out)| {
            let row = img.row(y);
            for x in 0..w {
                for k in 0..c {
                    let center = row[x * c + k];
                    let mut acc = 0.0;
                    for (t, wt) in kernel.iter().enumerate() {
                        let sx = (x as isize + t as isize - r).rem_euclid(w as isize) as usize;
                        acc += wt * (row[sx * c + k] - center);
                    }
                    out[x * c + k] = center + acc;
                }
            }
        });

    let mut data = vec![0.0; horiz.len()];
    data.par_chunks_mut(w * c).enumerate().for_each(|(y, out)| {
        let center_row = &horiz[y * w * c..(y + 1) * w * c];
        for (i, o) in out.iter_mut().enumerate() {
            let center = center_row[i];
            let mut acc = 0.0;
            for (t, wt) in kernel.iter().enumerate() {
                let sy = (y as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
                acc += wt * (horiz[sy * w * c + i] - center);
            }
            *o = (center + acc).clamp(0.0, 255.0);
        }
    });
    Ok(Image::from_raw(w, h, c, data))
}

/// Drops `round(fraction * width)` columns from each side. The result keeps
/// its reduced width.
pub fn crop_seam(img: &Image, fraction: f64) -> Result<Image> {
    if !(0.0..=0.1).contains(&fraction) {
        return Err(Error::config(format!(
            "seam crop fraction must be in [0, 0.1], got {fraction}"
        )));
    }
    let n = (fraction * img.width() as f64).round() as usize;
    if n == 0 {
        return Ok(img.clone());
    }
    let new_w = img.width().saturating_sub(2 * n);
    if new_w == 0 {
        return Err(Error::config(format!(
            "cropping {n} columns per side leaves nothing of width {}",
            img.width()
        )));
    }
    let c = img.channels();
    let mut data = Vec::with_capacity(new_w * img.height() * c);
    for y in 0..img.height() {
        data.extend_from_slice(&img.row(y)[n * c..(n + new_w) * c]);
    }
    Ok(Image::from_raw(new_w, img.height(), c, data))
}

/// One point of a corruption sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corruption {
    Fov { v: f64, fixed_band: f64 },
    SaltPepper { p: f64 },
    GaussianNoise { sigma: f64 },
    GaussianBlur { sigma: f64 },
    SeamCrop { fraction: f64 },
}

impl Corruption {
    pub fn apply(&self, img: &Image, seed: u64) -> Result<Image> {
        match *self {
            Corruption::Fov { v, fixed_band } => {
                reduce_vertical_fov(img, &FovReductionConfig { v, fixed_band })
            }
            Corruption::SaltPepper { p } => salt_pepper(img, p, seed),
            Corruption::GaussianNoise { sigma } => gaussian_noise(img, sigma, seed),
            Corruption::GaussianBlur { sigma } => gaussian_blur(img, sigma),
            Corruption::SeamCrop { fraction } => crop_seam(img, fraction),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Corruption::Fov { .. } => "fov",
            Corruption::SaltPepper { .. } => "salt_pepper",
            Corruption::GaussianNoise { .. } => "gaussian_noise",
            Corruption::GaussianBlur { .. } => "gaussian_blur",
            Corruption::SeamCrop { .. } => "seam_crop",
        }
    }

    pub fn strength(&self) -> f64 {
        match *self {
            Corruption::Fov { v, .. } => v,
            Corruption::SaltPepper { p } => p,
            Corruption::GaussianNoise { sigma } | Corruption::GaussianBlur { sigma } => sigma,
            Corruption::SeamCrop { fraction } => fraction,
        }
    }

    /// Directory-safe label such as `gaussian_noise_20`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.kind_name(), self.strength())
    }

    pub fn noise(kind: NoiseKind, strength: f64) -> Self {
        match kind {
            NoiseKind::SaltPepper => Corruption::SaltPepper { p: strength },
            NoiseKind::GaussianNoise => Corruption::GaussianNoise { sigma: strength },
            NoiseKind::GaussianBlur => Corruption::GaussianBlur { sigma: strength },
        }
    }

    /// Parses `kind` or `kind:level,level,...`, e.g. `fov:10,20` or
    /// `gaussian_blur`. Without levels the default sweep for that kind is used.
    pub fn parse_sweep(spec: &str) -> Result<Vec<Corruption>> {
        let (kind, levels) = match spec.split_once(':') {
            Some((k, l)) => (k.trim(), Some(l)),
            None => (spec.trim(), None),
        };
        let levels: Option<Vec<f64>> = levels
            .map(|l| {
                l.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::config(format!("bad sweep level {s:?} in {spec:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .transpose()?;
        let make: fn(f64) -> Corruption = match kind {
            "fov" => |v| Corruption::Fov { v, fixed_band: 90.0 },
            "salt_pepper" => |p| Corruption::SaltPepper { p },
            "gaussian_noise" => |sigma| Corruption::GaussianNoise { sigma },
            "gaussian_blur" => |sigma| Corruption::GaussianBlur { sigma },
            "seam_crop" => |fraction| Corruption::SeamCrop { fraction },
            other => return Err(Error::config(format!("unknown corruption kind {other:?}"))),
        };
        let defaults: Vec<f64> = match kind {
            "fov" => DEFAULT_FOV_LEVELS.to_vec(),
            "salt_pepper" => DEFAULT_SALT_PEPPER_LEVELS.to_vec(),
            "gaussian_noise" => DEFAULT_GAUSSIAN_NOISE_LEVELS.to_vec(),
            "gaussian_blur" => DEFAULT_BLUR_LEVELS.to_vec(),
            _ => vec![DEFAULT_SEAM_CROP_FRACTION],
        };
        let levels = levels.unwrap_or(defaults);
        if levels.is_empty() {
            return Err(Error::config(format!("empty sweep {spec:?}")));
        }
        Ok(levels.into_iter().map(make).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let v = ((x * 31 + y * 17) % 97) as f64 * 2.0 + 20.0;
            [v, 255.0 - v, (x * y % 256) as f64]
        })
    }

    #[test]
    fn zero_reduction_is_identity() {
        let img = textured(64, 32);
        assert_eq!(reduce_vertical_fov(&img, &FovReductionConfig::new(0.0)).unwrap(), img);
    }

    #[test]
    fn fov_row_mapping_matches_band_geometry() {
        let (w, h) = (8, 512);
        let img = Image::from_fn(w, h, |x, y| [y as f64 * 0.4, x as f64, (y % 7) as f64]);
        let out = reduce_vertical_fov(&img, &FovReductionConfig::new(40.0)).unwrap();
        assert_eq!((out.width(), out.height()), (w, h));
        for y in 128..384 {
            assert_eq!(out.row(y), img.row(y), "row {y}");
        }
        // top 71 rows [57, 128) stretched over [0, 128): output row y samples
        // continuous source row 57 + (y + 0.5) * 71/128 - 0.5, clamped to the band
        let first = (512.0f64 * 20.0 / 180.0).ceil() as usize;
        assert_eq!(first, 57);
        let span = (128 - first) as f64;
        for y in 0..128 {
            let s = (first as f64 + (y as f64 + 0.5) * span / 128.0 - 0.5).max(first as f64);
            let y0 = s.floor() as usize;
            let y1 = (y0 + 1).min(127);
            let t = s - y0 as f64;
            for x in 0..w {
                for k in 0..3 {
                    let a = img.pixel(x, y0)[k];
                    let b = img.pixel(x, y1)[k];
                    let want = a + t * (b - a);
                    assert!((out.pixel(x, y)[k] - want).abs() < 1e-9, "row {y}");
                }
            }
        }
        // bottom band mirrors it
        let flipped = reduce_vertical_fov(&img.flip_vertical(), &FovReductionConfig::new(40.0))
            .unwrap()
            .flip_vertical();
        for (a, b) in out.data().iter().zip(flipped.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fov_rejects_bad_configs() {
        let img = textured(32, 16);
        assert!(reduce_vertical_fov(&img, &FovReductionConfig::new(-1.0)).is_err());
        let cfg = FovReductionConfig {
            v: 100.0,
            fixed_band: 90.0,
        };
        assert!(reduce_vertical_fov(&img, &cfg).is_err());
        let cfg = FovReductionConfig {
            v: 88.0,
            fixed_band: 90.0,
        };
        // geometrically valid in degrees but too few rows at height 16
        assert!(reduce_vertical_fov(&img, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn fov_keeps_central_band(v in 0.0f64..80.0, seed in 0u64..1000) {
            let img = gaussian_noise(&textured(32, 128), 30.0, seed).unwrap();
            let out = reduce_vertical_fov(&img, &FovReductionConfig::new(v)).unwrap();
            for y in 32..96 {
                prop_assert_eq!(out.row(y), img.row(y));
            }
            prop_assert!(out.data().iter().all(|v| (0.0..=255.0).contains(v)));
        }
    }

    #[test]
    fn salt_pepper_endpoints() {
        let img = textured(40, 20);
        assert_eq!(salt_pepper(&img, 0.0, 7).unwrap(), img);
        let all = salt_pepper(&img, 1.0, 7).unwrap();
        assert!(all.data().iter().all(|&v| v == 0.0 || v == 255.0));
        assert!(salt_pepper(&img, 1.5, 7).is_err());
        assert!(salt_pepper(&img, -0.1, 7).is_err());
    }

    #[test]
    fn salt_pepper_rate_within_binomial_bound() {
        let img = Image::filled(1000, 1000, [128.0; 3]);
        let out = salt_pepper(&img, 0.1, 42).unwrap();
        let flipped = out.data().chunks(3).filter(|p| p[0] != 128.0).count();
        let n = 1_000_000.0;
        let frac = flipped as f64 / n;
        let sigma = (0.1 * 0.9 / n).sqrt();
        assert!((frac - 0.1).abs() <= 3.0 * sigma, "fraction {frac}");
    }

    #[test]
    fn gaussian_noise_moments() {
        let img = Image::filled(300, 300, [128.0; 3]);
        assert_eq!(gaussian_noise(&img, 0.0, 1).unwrap(), img);
        let out = gaussian_noise(&img, 10.0, 1).unwrap();
        let n = out.data().len() as f64;
        let mean = out.data().iter().sum::<f64>() / n;
        let var = out.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 10.0).abs() <= 0.5, "std {}", var.sqrt());
        assert_eq!(out, gaussian_noise(&img, 10.0, 1).unwrap());
        assert_ne!(out, gaussian_noise(&img, 10.0, 2).unwrap());
        assert!(gaussian_noise(&img, -1.0, 1).is_err());
    }

    #[test]
    fn blur_identity_and_flat() {
        let img = textured(30, 15);
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        let flat = Image::filled(30, 15, [99.0, 3.0, 250.0]);
        assert_eq!(gaussian_blur(&flat, 2.5).unwrap(), flat);
        assert!(gaussian_blur(&img, -0.5).is_err());
    }

    #[test]
    fn blur_impulse_matches_dense_convolution() {
        let (w, h) = (41, 31);
        let (cx, cy) = (20usize, 15usize);
        let sigma = 2.0;
        let img = Image::from_fn(w, h, |x, y| {
            if (x, y) == (cx, cy) {
                [255.0; 3]
            } else {
                [0.0; 3]
            }
        });
        let out = gaussian_blur(&img, sigma).unwrap();
        // dense 2-D sum with an independently built, normalized 1-D profile
        let r = 6isize;
        let g: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / 8.0).exp()).collect();
        let z: f64 = g.iter().sum();
        for y in 0..h {
            for x in 0..w {
                let mut want = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x as isize + dx).rem_euclid(w as isize) as usize;
                        let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                        let wt = g[(dx + r) as usize] * g[(dy + r) as usize] / (z * z);
                        want += wt * img.pixel(sx, sy)[0];
                    }
                }
                assert!((out.pixel(x, y)[0] - want).abs() < 1e-6, "({x},{y})");
            }
        }
    }

    #[test]
    fn seam_crop_widths() {
        let img = textured(2048, 16);
        assert_eq!(crop_seam(&img, 0.0).unwrap(), img);
        let out = crop_seam(&img, 0.0025).unwrap();
        assert_eq!(out.width(), 2038);
        assert_eq!(out.pixel(0, 3), img.pixel(5, 3));
        assert_eq!(out.pixel(2037, 3), img.pixel(2042, 3));
        assert!(crop_seam(&img, 0.2).is_err());
    }

    #[test]
    fn stronger_corruption_moves_further() {
        let img = textured(64, 32);
        let dist = |f: &dyn Fn(f64) -> Image, levels: &[f64]| -> Vec<f64> {
            levels.iter().map(|&l| f(l).l2_distance(&img).unwrap()).collect()
        };
        let series = [
            dist(&|p| salt_pepper(&img, p, 3).unwrap(), &DEFAULT_SALT_PEPPER_LEVELS),
            dist(&|s| gaussian_noise(&img, s, 3).unwrap(), &DEFAULT_GAUSSIAN_NOISE_LEVELS),
            dist(&|s| gaussian_blur(&img, s).unwrap(), &DEFAULT_BLUR_LEVELS),
            dist(
                &|v| reduce_vertical_fov(&img, &FovReductionConfig::new(v)).unwrap(),
                &DEFAULT_FOV_LEVELS,
            ),
        ];
        for s in &series {
            assert!(s.windows(2).all(|p| p[0] <= p[1]), "{s:?}");
        }
    }

    #[test]
    fn sweep_specs() {
        let s = Corruption::parse_sweep("fov:10,40").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], Corruption::Fov { v: 40.0, fixed_band: 90.0 });
        assert_eq!(Corruption::parse_sweep("gaussian_blur").unwrap().len(), 4);
        assert_eq!(
            Corruption::parse_sweep("seam_crop").unwrap(),
            vec![Corruption::SeamCrop { fraction: 0.0025 }]
        );
        assert!(Corruption::parse_sweep("sepia").is_err());
        assert!(Corruption::parse_sweep("fov:x").is_err());
        assert_eq!(s[0].label(), "fov_10");
    }

    #[test]
    fn image_seeds_differ() {
        assert_ne!(image_seed(1, 0), image_seed(1, 1));
        assert_ne!(image_seed(1, 0), image_seed(2, 0));
        assert_eq!(image_seed(9, 4), image_seed(9, 4));
    }
}
