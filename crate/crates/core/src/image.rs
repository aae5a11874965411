//! Float raster images on the 8-bit intensity scale.
//!
//! Pixels are stored interleaved, row-major, as `f64` values in `[0, 255]`.
//! Keeping the 8-bit scale (rather than `[0, 1]`) matters for the
//! discontinuity score, whose stabilizer constant is calibrated against it.

use std::ops::Deref;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::input(format!(
                "image dimensions must be positive, got {width}x{height}x{channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::input(format!(
                "pixel buffer holds {} values, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::input(format!("intensity {bad} outside [0, 255]")));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Constant RGB image.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Image {
            width,
            height,
            channels: 3,
            data,
        }
    }

    /// Builds an RGB image from a per-pixel function. Values are clamped to `[0, 255]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).iter().map(|v| v.clamp(0.0, 255.0)));
            }
        }
        Image {
            width,
            height,
            channels: 3,
            data,
        }
    }

    /// Wraps a buffer produced by an operator that already guarantees the
    /// value range.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        let stride = self.width * self.channels;
        &self.data[y * stride..(y + 1) * stride]
    }

    pub fn ensure_rgb(&self) -> Result<()> {
        if self.channels == 3 {
            Ok(())
        } else {
            Err(Error::NotRgb(self.channels))
        }
    }

    /// BT.601 luma per pixel, row-major.
    pub fn luma(&self) -> Result<Vec<f64>> {
        match self.channels {
            1 => Ok(self.data.clone()),
            3 => Ok(self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                .collect()),
            c => Err(Error::NotRgb(c)),
        }
    }

    /// Shifts content horizontally by `shift` columns with wrap-around, so
    /// that output column `x` holds input column `x + shift (mod width)`.
    pub fn roll_horizontal(&self, shift: isize) -> Image {
        let w = self.width as isize;
        let c = self.channels;
        let mut out = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            let row = self.row(y);
            for x in 0..w {
                let src = (x + shift).rem_euclid(w) as usize;
                out.extend_from_slice(&row[src * c..(src + 1) * c]);
            }
        }
        Image::from_raw(self.width, self.height, c, out)
    }

    pub fn flip_vertical(&self) -> Image {
        let mut out = Vec::with_capacity(self.data.len());
        for y in (0..self.height).rev() {
            out.extend_from_slice(self.row(y));
        }
        Image::from_raw(self.width, self.height, self.channels, out)
    }

    /// Pixel values rounded to 8 bits, the form written to disk.
    pub fn to_rgb8(&self) -> Result<image::RgbImage> {
        self.ensure_rgb()?;
        let bytes = self.data.iter().map(|v| quantize(*v)).collect();
        Ok(image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions"))
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Image {
        let data = img.as_raw().iter().map(|&b| f64::from(b)).collect();
        Image::from_raw(img.width() as usize, img.height() as usize, 3, data)
    }

    /// Decodes PNG/JPEG (or anything the `image` crate recognises) into RGB.
    pub fn open(path: &Path) -> Result<Image> {
        let decoded = image::open(path).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Image::from_rgb8(&decoded.to_rgb8()))
    }

    /// Writes an 8-bit image; the format follows the file extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_rgb8()?.save(path).map_err(|source| Error::Encode {
            path: path.to_path_buf(),
            source,
        })
    }

    /// SHA-256 over dimensions and 8-bit pixel bytes.
    pub fn content_hash(&self) -> Result<ContentHash> {
        Ok(ContentHash::of_rgb8(&self.to_rgb8()?))
    }

    pub fn mean_abs_diff(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum / self.data.len() as f64)
    }

    pub fn l2_distance(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum.sqrt())
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if (self.width, self.height, self.channels) != (other.width, other.height, other.channels) {
            return Err(Error::input(format!(
                "image shapes differ: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// PSNR in dB on the 255 peak, restricted to rows `rows`.
pub fn psnr_rows(a: &Image, b: &Image, rows: std::ops::Range<usize>) -> Result<f64> {
    a.check_same_shape(b)?;
    if rows.is_empty() || rows.end > a.height() {
        return Err(Error::input("row range out of bounds"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in rows {
        for (p, q) in a.row(y).iter().zip(b.row(y)) {
            sum += (p - q) * (p - q);
            n += 1;
        }
    }
    let mse = sum / n as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    })
}

/// A full-sphere image in equirectangular layout: `width == 2 * height`,
/// three channels. Column centers span longitude, row centers latitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectImage(Image);

impl EquirectImage {
    pub fn new(img: Image) -> Result<Self> {
        img.ensure_rgb()?;
        if img.width() != 2 * img.height() {
            return Err(Error::AspectRatio {
                width: img.width(),
                height: img.height(),
            });
        }
        Ok(EquirectImage(img))
    }

    pub fn image(&self) -> &Image {
        &self.0
    }

    pub fn into_image(self) -> Image {
        self.0
    }
}

impl Deref for EquirectImage {
    type Target = Image;

    fn deref(&self) -> &Image {
        &self.0
    }
}

impl TryFrom<Image> for EquirectImage {
    type Error = Error;

    fn try_from(img: Image) -> Result<Self> {
        EquirectImage::new(img)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of_rgb8(img: &image::RgbImage) -> Self {
        let mut h = Sha256::new();
        h.update((img.width() as u64).to_le_bytes());
        h.update((img.height() as u64).to_le_bytes());
        h.update(img.as_raw());
        ContentHash(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, b) in out.iter_mut().enumerate() {
            *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(ContentHash(out))
    }
}

impl serde::Serialize for ContentHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for ContentHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ContentHash::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 hex digits"))
    }
}

impl std::fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ContentHash({})", &self.to_hex()[..16])
    }
}

impl std::fmt::Display for ContentHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_values() {
        assert!(Image::new(1, 1, 3, vec![0.0, 256.0, 0.0]).is_err());
        assert!(Image::new(1, 1, 3, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(Image::new(1, 1, 3, vec![0.0, 255.0, 1.5]).is_ok());
    }

    #[test]
    fn equirect_requires_two_to_one() {
        assert!(EquirectImage::new(Image::filled(8, 4, [1.0; 3])).is_ok());
        assert!(matches!(
            EquirectImage::new(Image::filled(10, 7, [1.0; 3])),
            Err(Error::AspectRatio { width: 10, height: 7 })
        ));
    }

    #[test]
    fn roll_wraps_columns() {
        let img = Image::from_fn(4, 1, |x, _| [x as f64; 3]);
        let rolled = img.roll_horizontal(1);
        let firsts: Vec<f64> = (0..4).map(|x| rolled.pixel(x, 0)[0]).collect();
        assert_eq!(firsts, vec![1.0, 2.0, 3.0, 0.0]);
        assert_eq!(img.roll_horizontal(-1).pixel(0, 0)[0], 3.0);
    }

    #[test]
    fn hash_tracks_pixels_not_float_noise() {
        let a = Image::filled(4, 2, [10.0; 3]);
        let b = Image::filled(4, 2, [10.2; 3]);
        let c = Image::filled(4, 2, [11.0; 3]);
        assert_eq!(a.content_hash().unwrap(), b.content_hash().unwrap());
        assert_ne!(a.content_hash().unwrap(), c.content_hash().unwrap());
    }
}
