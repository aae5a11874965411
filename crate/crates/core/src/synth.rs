//! Deterministic synthetic equirectangular images.
//!
//! Images are defined as continuous functions of (yaw, pitch) and sampled
//! at pixel centres, so the same seed gives the same scene at any
//! resolution. Every term is periodic in yaw, which keeps the seam
//! continuous unless one is injected explicitly.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corruption::image_seed;
use crate::error::{Error, Result};
use crate::image::Image;

/// Half-width of the soft cap rim.
const CAP_RIM: f64 = PI / 90.0;

/// Random parameters of one pole-textured scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleScene {
    base: f64,
    north_cap: f64,
    south_cap: f64,
    cap_edge: f64,
    ring_amp: f64,
    ring_period: f64,
    ring_phase: f64,
    wave_amp: f64,
    wave_k: f64,
    wave_phase: f64,
    texture_amp: f64,
    texture_m: f64,
    texture_q: f64,
    texture_phase: f64,
    tint: [f64; 3],
}

impl PoleScene {
    pub fn random(seed: u64, index: u64) -> PoleScene {
        let mut rng = ChaCha8Rng::seed_from_u64(image_seed(seed, index));
        let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        PoleScene {
            base: u(70.0, 120.0),
            north_cap: u(40.0, 80.0),
            south_cap: u(-60.0, -30.0),
            cap_edge: u(34.0, 42.0).to_radians(),
            ring_amp: u(8.0, 18.0),
            ring_period: u(8.0, 14.0).to_radians(),
            ring_phase: u(0.0, 2.0 * PI),
            wave_amp: u(8.0, 22.0),
            wave_k: u(1.0, 4.0).floor(),
            wave_phase: u(0.0, 2.0 * PI),
            texture_amp: u(5.0, 15.0),
            texture_m: u(4.0, 9.0).floor(),
            texture_q: u(3.0, 7.0),
            texture_phase: u(0.0, 2.0 * PI),
            tint: [u(0.9, 1.1), u(0.9, 1.1), u(0.9, 1.1)],
        }
    }

    /// Luma-like intensity at a direction, before tinting.
    ///
    /// Each pole carries a cap (think ceiling or floor) whose rim sits
    /// 34..42 degrees from the pole, with faint rings inside it.
    fn intensity(&self, yaw: f64, pitch: f64) -> f64 {
        let colat = PI / 2.0 - pitch.abs();
        let inside = ((self.cap_edge - colat) / CAP_RIM).clamp(-1.0, 1.0) * 0.5 + 0.5;
        let cap = if pitch >= 0.0 {
            self.north_cap
        } else {
            self.south_cap
        };
        let rings = self.ring_amp * inside * (2.0 * PI * colat / self.ring_period + self.ring_phase).sin();
        let wave = self.wave_amp * pitch.cos() * (self.wave_k * yaw + self.wave_phase).cos();
        let texture = self.texture_amp
            * pitch.cos()
            * (self.texture_m * yaw + self.texture_q * pitch + self.texture_phase).sin();
        self.base + cap * inside + rings + wave + texture
    }

    pub fn render(&self, width: usize) -> Result<Image> {
        if width < 2 || width % 2 != 0 {
            return Err(Error::input(format!("width must be even and >= 2, got {width}")));
        }
        let h = width / 2;
        Ok(Image::from_fn(width, h, |x, y| {
            let yaw = ((x as f64 + 0.5) / width as f64 - 0.5) * 2.0 * PI;
            let pitch = (0.5 - (y as f64 + 0.5) / h as f64) * PI;
            let v = self.intensity(yaw, pitch);
            self.tint.map(|t| t * v)
        }))
    }
}

pub fn pole_textured(width: usize, seed: u64, index: u64) -> Result<Image> {
    PoleScene::random(seed, index).render(width)
}

pub fn pole_textured_set(count: usize, width: usize, seed: u64) -> Result<Vec<Image>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| pole_textured(width, seed, i))
        .collect()
}

/// Adds a horizontal ramp rising by `offset` across the width, so the
/// right and left borders no longer meet: the seam jumps by about `offset`.
pub fn inject_seam(img: &Image, offset: f64) -> Image {
    let w = img.width() as f64;
    let c = img.channels();
    let mut out = img.clone();
    let row_len = img.width() * c;
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let x = (i % row_len) / c;
        let ramp = offset * ((x as f64 + 0.5) / w - 0.5);
        *v = (*v - ramp).clamp(0.0, 255.0);
    }
    out
}

/// Offsets used by [`graded_seam_corpus`], in increasing severity.
pub const GRADED_OFFSETS: [f64; 10] = [0.0, 4.0, 8.0, 12.0, 18.0, 24.0, 32.0, 44.0, 60.0, 80.0];

/// Ten copies of one scene with increasing seam offsets.
pub fn graded_seam_corpus(width: usize, seed: u64) -> Result<Vec<(f64, Image)>> {
    let base = pole_textured(width, seed, 0)?;
    Ok(GRADED_OFFSETS.iter().map(|&o| (o, inject_seam(&base, o))).collect())
}
