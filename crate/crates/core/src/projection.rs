//! Equirectangular <-> tangential cubemap conversion.
//!
//! Axes: `+z` is forward (yaw 0, pitch 0, the equirect image center), `+x`
//! is right (yaw +90), `+y` is up (pitch +90). Each face is a gnomonic
//! projection onto the cube face tangent to the unit sphere, described by
//! its outward axis and the in-face right and down axes. Face `U` has its
//! top edge against `B`; face `D` has its top edge against `F`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EquirectImage, Image};

type Vec3 = [f64; 3];

/// Dot products closer than this count as ties, resolved in face order.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceLabel {
    F,
    R,
    B,
    L,
    U,
    D,
}

impl FaceLabel {
    pub const ALL: [FaceLabel; 6] = [
        FaceLabel::F,
        FaceLabel::R,
        FaceLabel::B,
        FaceLabel::L,
        FaceLabel::U,
        FaceLabel::D,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_frontal(self) -> bool {
        !self.is_polar()
    }

    pub fn is_polar(self) -> bool {
        matches!(self, FaceLabel::U | FaceLabel::D)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaceLabel::F => "F",
            FaceLabel::R => "R",
            FaceLabel::B => "B",
            FaceLabel::L => "L",
            FaceLabel::U => "U",
            FaceLabel::D => "D",
        }
    }

    /// (outward axis, in-face right, in-face down)
    fn basis(self) -> (Vec3, Vec3, Vec3) {
        match self {
            FaceLabel::F => ([0., 0., 1.], [1., 0., 0.], [0., -1., 0.]),
            FaceLabel::R => ([1., 0., 0.], [0., 0., -1.], [0., -1., 0.]),
            FaceLabel::B => ([0., 0., -1.], [-1., 0., 0.], [0., -1., 0.]),
            FaceLabel::L => ([-1., 0., 0.], [0., 0., 1.], [0., -1., 0.]),
            FaceLabel::U => ([0., 1., 0.], [1., 0., 0.], [0., 0., 1.]),
            FaceLabel::D => ([0., -1., 0.], [1., 0., 0.], [0., 0., -1.]),
        }
    }
}

impl std::fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A viewing direction in degrees. Yaw is in `[-180, 180)`, pitch in `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    yaw: f64,
    pitch: f64,
}

impl Direction {
    pub fn new(yaw: f64, pitch: f64) -> Result<Self> {
        if !(-180.0..180.0).contains(&yaw) || !(-90.0..=90.0).contains(&pitch) {
            return Err(Error::input(format!(
                "direction (yaw {yaw}, pitch {pitch}) out of range"
            )));
        }
        Ok(Direction { yaw, pitch })
    }

    /// Wraps yaw into `[-180, 180)`; pitch is clamped to `[-90, 90]`.
    pub fn wrapped(yaw: f64, pitch: f64) -> Self {
        let mut yaw = (yaw + 180.0).rem_euclid(360.0) - 180.0;
        if yaw >= 180.0 {
            yaw -= 360.0;
        }
        Direction {
            yaw,
            pitch: pitch.clamp(-90.0, 90.0),
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    fn to_vector(self) -> Vec3 {
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        let (sp, cp) = self.pitch.to_radians().sin_cos();
        [cp * sy, sp, cp * cy]
    }

    fn from_vector(v: Vec3) -> Self {
        let horiz = v[0].hypot(v[2]);
        let pitch = v[1].atan2(horiz).to_degrees();
        let yaw = if horiz == 0.0 {
            0.0
        } else {
            v[0].atan2(v[2]).to_degrees()
        };
        Direction::wrapped(yaw, pitch)
    }
}

#[inline]
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Face hit by `dir` and gnomonic in-face coordinates: `u` grows to the
/// right, `v` downwards, both in `[0, 1]`.
pub fn spherical_to_face(dir: Direction) -> (FaceLabel, f64, f64) {
    let p = dir.to_vector();
    let mut best = FaceLabel::F;
    let mut best_dot = f64::NEG_INFINITY;
    for face in FaceLabel::ALL {
        let d = dot(p, face.basis().0);
        if d > best_dot + TIE_EPS {
            best = face;
            best_dot = d;
        }
    }
    let (fwd, right, down) = best.basis();
    let depth = dot(p, fwd);
    let u = ((dot(p, right) / depth + 1.0) * 0.5).clamp(0.0, 1.0);
    let v = ((dot(p, down) / depth + 1.0) * 0.5).clamp(0.0, 1.0);
    (best, u, v)
}

/// Inverse of [`spherical_to_face`]: the direction through in-face point `(u, v)`.
pub fn face_to_direction(face: FaceLabel, u: f64, v: f64) -> Direction {
    let (fwd, right, down) = face.basis();
    let a = 2.0 * u - 1.0;
    let b = 2.0 * v - 1.0;
    let p = [
        fwd[0] + a * right[0] + b * down[0],
        fwd[1] + a * right[1] + b * down[1],
        fwd[2] + a * right[2] + b * down[2],
    ];
    Direction::from_vector(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Face edge length in pixels; `None` means half the equirect height.
    pub face_size: Option<usize>,
    pub sampling: Sampling,
}

impl ProjectionConfig {
    pub fn face_size_for(&self, equirect_height: usize) -> usize {
        self.face_size.unwrap_or(equirect_height / 2).max(2)
    }
}

/// Six square faces covering the sphere, indexed by [`FaceLabel`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubemapSet {
    faces: [Image; 6],
}

impl CubemapSet {
    pub fn new(faces: [Image; 6]) -> Result<Self> {
        let n = faces[0].width();
        for f in &faces {
            f.ensure_rgb()?;
            if f.width() != n || f.height() != n {
                return Err(Error::input(format!(
                    "cubemap faces must be identical squares, got {}x{} next to {n}x{n}",
                    f.width(),
                    f.height()
                )));
            }
        }
        Ok(CubemapSet { faces })
    }

    pub fn face(&self, label: FaceLabel) -> &Image {
        &self.faces[label.index()]
    }

    pub fn faces(&self) -> &[Image; 6] {
        &self.faces
    }

    pub fn into_faces(self) -> [Image; 6] {
        self.faces
    }

    pub fn face_size(&self) -> usize {
        self.faces[0].width()
    }
}

#[derive(Clone, Copy)]
enum Edge {
    Clamp,
    Wrap,
}

#[inline]
fn edge_index(i: isize, n: usize, edge: Edge) -> usize {
    match edge {
        Edge::Clamp => i.clamp(0, n as isize - 1) as usize,
        Edge::Wrap => i.rem_euclid(n as isize) as usize,
    }
}

/// Samples at continuous pixel coordinates (pixel centers at integers).
fn sample(img: &Image, x: f64, y: f64, sampling: Sampling, x_edge: Edge, out: &mut [f64]) {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    match sampling {
        Sampling::Nearest => {
            let xi = edge_index(x.round() as isize, w, x_edge);
            let yi = edge_index(y.round() as isize, h, Edge::Clamp);
            out.copy_from_slice(img.pixel(xi, yi));
        }
        Sampling::Bilinear => {
            let x0 = x.floor();
            let y0 = y.floor();
            let tx = x - x0;
            let ty = y - y0;
            let xa = edge_index(x0 as isize, w, x_edge);
            let xb = edge_index(x0 as isize + 1, w, x_edge);
            let ya = edge_index(y0 as isize, h, Edge::Clamp);
            let yb = edge_index(y0 as isize + 1, h, Edge::Clamp);
            let (p00, p10) = (img.pixel(xa, ya), img.pixel(xb, ya));
            let (p01, p11) = (img.pixel(xa, yb), img.pixel(xb, yb));
            for k in 0..c {
                let top = lerp(p00[k], p10[k], tx);
                let bottom = lerp(p01[k], p11[k], tx);
                out[k] = lerp(top, bottom, ty).clamp(0.0, 255.0);
            }
        }
    }
}

// `a + t * (b - a)` returns `a` exactly when `a == b`, so flat regions stay flat.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

fn equirect_coords(dir: Direction, w: usize, h: usize) -> (f64, f64) {
    let x = (dir.yaw / 360.0 + 0.5) * w as f64 - 0.5;
    let y = (0.5 - dir.pitch / 180.0) * h as f64 - 0.5;
    (x, y)
}

fn pixel_direction(x: usize, y: usize, w: usize, h: usize) -> Direction {
    let yaw = ((x as f64 + 0.5) / w as f64 - 0.5) * 360.0;
    let pitch = (0.5 - (y as f64 + 0.5) / h as f64) * 180.0;
    Direction::wrapped(yaw, pitch)
}

fn render_face(img: &Image, face: FaceLabel, n: usize, sampling: Sampling) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut data = vec![0.0; n * n * 3];
    data.par_chunks_mut(n * 3).enumerate().for_each(|(j, row)| {
        let v = (j as f64 + 0.5) / n as f64;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let (x, y) = equirect_coords(face_to_direction(face, u, v), w, h);
            sample(img, x, y, sampling, Edge::Wrap, &mut row[i * 3..i * 3 + 3]);
        }
    });
    Image::from_raw(n, n, 3, data)
}

pub fn equirect_to_cubemap(
    img: &EquirectImage,
    face_size: usize,
    sampling: Sampling,
) -> Result<CubemapSet> {
    if face_size < 2 {
        return Err(Error::input(format!("face size must be >= 2, got {face_size}")));
    }
    let faces: Vec<Image> = FaceLabel::ALL
        .par_iter()
        .map(|&f| render_face(img, f, face_size, sampling))
        .collect();
    let faces: [Image; 6] = faces.try_into().expect("six faces");
    Ok(CubemapSet { faces })
}

/// Convenience wrapper that accepts any image and checks the aspect ratio.
pub fn project(img: &Image, cfg: &ProjectionConfig) -> Result<CubemapSet> {
    let eq = EquirectImage::new(img.clone())?;
    equirect_to_cubemap(&eq, cfg.face_size_for(eq.height()), cfg.sampling)
}

pub fn cubemap_to_equirect(
    cm: &CubemapSet,
    width: usize,
    height: usize,
    sampling: Sampling,
) -> Result<EquirectImage> {
    if height == 0 || width != 2 * height {
        return Err(Error::AspectRatio { width, height });
    }
    let n = cm.face_size();
    let mut data = vec![0.0; width * height * 3];
    data.par_chunks_mut(width * 3).enumerate().for_each(|(y, row)| {
        for x in 0..width {
            let (face, u, v) = spherical_to_face(pixel_direction(x, y, width, height));
            let fx = u * n as f64 - 0.5;
            let fy = v * n as f64 - 0.5;
            sample(
                cm.face(face),
                fx,
                fy,
                sampling,
                Edge::Clamp,
                &mut row[x * 3..x * 3 + 3],
            );
        }
    });
    EquirectImage::new(Image::from_raw(width, height, 3, data))
}

/// Bilinear resize with half-pixel centers and edge clamping (no antialiasing).
/// Returns an exact copy when the size is unchanged.
pub fn resize(img: &Image, new_width: usize, new_height: usize) -> Result<Image> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::input(format!(
            "resize target must be positive, got {new_width}x{new_height}"
        )));
    }
    if (new_width, new_height) == (img.width(), img.height()) {
        return Ok(img.clone());
    }
    let c = img.channels();
    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (s.floor() as usize).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(img.width(), new_width);
    let yt = taps(img.height(), new_height);
    let mut data = vec![0.0; new_width * new_height * c];
    data.par_chunks_mut(new_width * c)
        .zip(yt.par_iter())
        .for_each(|(row, &(y0, y1, ty))| {
            let (ra, rb) = (img.row(y0), img.row(y1));
            for (xo, &(x0, x1, tx)) in xt.iter().enumerate() {
                for k in 0..c {
                    let top = lerp(ra[x0 * c + k], ra[x1 * c + k], tx);
                    let bottom = lerp(rb[x0 * c + k], rb[x1 * c + k], tx);
                    row[xo * c + k] = lerp(top, bottom, ty).clamp(0.0, 255.0);
                }
            }
        });
    Ok(Image::from_raw(new_width, new_height, c, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::psnr_rows;
    use proptest::prelude::*;

    fn dir(yaw: f64, pitch: f64) -> Direction {
        Direction::new(yaw, pitch).unwrap()
    }

    #[test]
    fn face_centers() {
        assert_eq!(spherical_to_face(dir(0.0, 0.0)), (FaceLabel::F, 0.5, 0.5));
        let (f, u, v) = spherical_to_face(dir(0.0, 90.0));
        assert_eq!(f, FaceLabel::U);
        assert!((u - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
        assert_eq!(spherical_to_face(dir(90.0, 0.0)).0, FaceLabel::R);
        assert_eq!(spherical_to_face(dir(-180.0, 0.0)).0, FaceLabel::B);
        assert_eq!(spherical_to_face(dir(-90.0, 0.0)).0, FaceLabel::L);
        assert_eq!(spherical_to_face(dir(17.0, -90.0)).0, FaceLabel::D);
    }

    #[test]
    fn f_r_boundary_breaks_tie_towards_front() {
        // At yaw 45 the F and R axes have equal dot products (cos 45 = sin 45).
        let (f, u, v) = spherical_to_face(dir(45.0, 0.0));
        assert_eq!(f, FaceLabel::F);
        assert!((u - 1.0).abs() < 1e-12, "u = {u}");
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn up_face_top_edge_touches_back() {
        let d = face_to_direction(FaceLabel::U, 0.5, 0.0);
        assert!((d.pitch() - 45.0).abs() < 1e-9);
        assert!((d.yaw().abs() - 180.0).abs() < 1e-9);
        let d = face_to_direction(FaceLabel::D, 0.5, 0.0);
        assert!((d.pitch() + 45.0).abs() < 1e-9);
        assert!(d.yaw().abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn every_direction_lands_on_one_face(yaw in -180.0f64..180.0, pitch in -90.0f64..=90.0) {
            let (_, u, v) = spherical_to_face(dir(yaw, pitch));
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn face_coordinates_invert(yaw in -179.0f64..179.0, pitch in -85.0f64..85.0) {
            let d = dir(yaw, pitch);
            let (f, u, v) = spherical_to_face(d);
            prop_assume!(u > 1e-6 && u < 1.0 - 1e-6 && v > 1e-6 && v < 1.0 - 1e-6);
            let back = face_to_direction(f, u, v);
            prop_assert!((back.yaw() - yaw).abs() < 1e-9, "{} vs {}", back.yaw(), yaw);
            prop_assert!((back.pitch() - pitch).abs() < 1e-9);
        }
    }

    fn equirect(w: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> EquirectImage {
        EquirectImage::new(Image::from_fn(w, w / 2, f)).unwrap()
    }

    #[test]
    fn constant_image_gives_constant_faces() {
        let img = equirect(64, |_, _| [77.0, 77.0, 77.0]);
        let cm = equirect_to_cubemap(&img, 16, Sampling::Bilinear).unwrap();
        for face in cm.faces() {
            assert!(face.data().iter().all(|&v| v == 77.0));
        }
        let back = cubemap_to_equirect(&cm, 64, 32, Sampling::Bilinear).unwrap();
        assert!(back.data().iter().all(|&v| v == 77.0));
    }

    #[test]
    fn hemispheres_match_direction_oracle() {
        let (w, h) = (128, 64);
        let img = equirect(w, |_, y| if y < h / 2 { [255.0; 3] } else { [0.0; 3] });
        let n = 24;
        let cm = equirect_to_cubemap(&img, n, Sampling::Bilinear).unwrap();
        assert!(cm.face(FaceLabel::U).data().iter().all(|&v| v == 255.0));
        assert!(cm.face(FaceLabel::D).data().iter().all(|&v| v == 0.0));

        // Oracle for the side faces: the tangent-plane point (a, -b, 1) has
        // pitch atan2(-b, sqrt(1 + a^2)) whatever the face's yaw.
        for face in [FaceLabel::F, FaceLabel::R, FaceLabel::B, FaceLabel::L] {
            for j in 0..n {
                let b = 2.0 * (j as f64 + 0.5) / n as f64 - 1.0;
                for i in 0..n {
                    let a = 2.0 * (i as f64 + 0.5) / n as f64 - 1.0;
                    let pitch = (-b).atan2((1.0 + a * a).sqrt()).to_degrees();
                    let value = cm.face(face).pixel(i, j)[0];
                    // one equirect row spans 180/h degrees; stay clear of the seam blur
                    if pitch > 180.0 / h as f64 {
                        assert_eq!(value, 255.0, "{face} ({i},{j}) pitch {pitch}");
                    } else if pitch < -180.0 / h as f64 {
                        assert_eq!(value, 0.0, "{face} ({i},{j}) pitch {pitch}");
                    }
                }
            }
        }
    }

    #[test]
    fn standard_resolution_faces() {
        let img = equirect(1024, |x, y| [(x % 256) as f64, (y % 256) as f64, 9.0]);
        let cfg = ProjectionConfig::default();
        let cm = project(&img, &cfg).unwrap();
        assert_eq!(cm.face_size(), 256);
        for f in cm.faces() {
            assert_eq!((f.width(), f.height()), (256, 256));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let img = equirect(16, |_, _| [0.0; 3]);
        assert!(equirect_to_cubemap(&img, 1, Sampling::Bilinear).is_err());
        let cm = equirect_to_cubemap(&img, 4, Sampling::Bilinear).unwrap();
        assert!(matches!(
            cubemap_to_equirect(&cm, 30, 16, Sampling::Bilinear),
            Err(Error::AspectRatio { .. })
        ));
        assert!(project(&Image::filled(10, 7, [0.0; 3]), &ProjectionConfig::default()).is_err());
    }

    #[test]
    fn pole_lies_on_up_face() {
        let n = 8;
        let faces: [Image; 6] = std::array::from_fn(|i| {
            let v = if FaceLabel::ALL[i] == FaceLabel::U { 255.0 } else { 0.0 };
            Image::filled(n, n, [v; 3])
        });
        let cm = CubemapSet::new(faces).unwrap();
        let eq = cubemap_to_equirect(&cm, 64, 32, Sampling::Bilinear).unwrap();
        assert!(eq.row(0).iter().all(|&v| v == 255.0));
        assert!(eq.row(31).iter().all(|&v| v == 0.0));
    }

    fn smooth_sphere(w: usize) -> EquirectImage {
        let h = w / 2;
        equirect(w, |x, y| {
            let d = pixel_direction(x, y, w, h);
            let (yaw, pitch) = (d.yaw().to_radians(), d.pitch().to_radians());
            let (p, q, r) = (pitch.cos() * yaw.sin(), pitch.sin(), pitch.cos() * yaw.cos());
            [
                128.0 + 60.0 * p + 30.0 * q * r,
                128.0 + 50.0 * r - 40.0 * p * q,
                128.0 + 70.0 * q + 20.0 * (p * p - r * r),
            ]
        })
    }

    fn round_trip_psnr(w: usize, face: usize) -> f64 {
        let img = smooth_sphere(w);
        let h = w / 2;
        let cm = equirect_to_cubemap(&img, face, Sampling::Bilinear).unwrap();
        let back = cubemap_to_equirect(&cm, w, h, Sampling::Bilinear).unwrap();
        let skip = (h as f64 * 0.05).round() as usize;
        psnr_rows(&img, &back, skip..h - skip).unwrap()
    }

    #[test]
    fn round_trip_is_near_identity_on_smooth_content() {
        // Reference at 4x face density bounds what resampling alone costs.
        let reference = round_trip_psnr(1024, 1024);
        let psnr = round_trip_psnr(1024, 256);
        assert!(reference >= psnr - 1e-9, "{reference} < {psnr}");
        assert!(psnr >= 30.0, "psnr {psnr}");
    }

    /// Content moved 90 degrees to the left: F->L, L->B, B->R, R->F.
    #[test]
    fn quarter_turn_permutes_faces() {
        let w = 256;
        let img = equirect(w, |x, y| {
            [
                ((x * 7 + y * 3) % 256) as f64,
                (128.0 + 100.0 * ((x as f64) * 0.11).sin() * ((y as f64) * 0.07).cos()),
                ((x / 8 + y / 8) % 2) as f64 * 255.0,
            ]
        });
        let rotated = EquirectImage::new(img.roll_horizontal((w / 4) as isize)).unwrap();
        let n = 32;
        let a = equirect_to_cubemap(&img, n, Sampling::Bilinear).unwrap();
        let b = equirect_to_cubemap(&rotated, n, Sampling::Bilinear).unwrap();
        let max_diff = |x: &Image, y: &Image| {
            x.data()
                .iter()
                .zip(y.data())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        use FaceLabel::*;
        for (from, to) in [(F, L), (L, B), (B, R), (R, F)] {
            let d = max_diff(a.face(from), b.face(to));
            assert!(d <= 1.0, "{from}->{to}: {d}");
        }
        // U turns clockwise, D counter-clockwise (as seen in face coordinates)
        let rot_cw = |img: &Image| {
            Image::from_fn(n, n, |x, y| {
                let p = img.pixel(y, n - 1 - x);
                [p[0], p[1], p[2]]
            })
        };
        let rot_ccw = |img: &Image| {
            Image::from_fn(n, n, |x, y| {
                let p = img.pixel(n - 1 - y, x);
                [p[0], p[1], p[2]]
            })
        };
        assert!(max_diff(&rot_cw(a.face(U)), b.face(U)) <= 1.0);
        assert!(max_diff(&rot_ccw(a.face(D)), b.face(D)) <= 1.0);
    }

    #[test]
    fn resize_behaviour() {
        let img = Image::from_fn(1920, 960, |x, y| [(x % 255) as f64, (y % 255) as f64, 3.0]);
        let small = resize(&img, 1024, 512).unwrap();
        assert_eq!((small.width(), small.height()), (1024, 512));
        assert_eq!(resize(&img, 1920, 960).unwrap(), img);

        let flat = Image::filled(37, 11, [12.5, 200.0, 0.0]);
        for (w, h) in [(1, 1), (299, 299), (74, 5)] {
            let r = resize(&flat, w, h).unwrap();
            assert!(r.data().chunks(3).all(|p| p == [12.5, 200.0, 0.0]));
        }
        assert!(resize(&flat, 0, 3).is_err());
    }
}
