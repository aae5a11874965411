//! Discontinuity Score (DS): how abruptly intensities jump across the
//! wrap-around seam of an equirectangular image, relative to the gradient
//! just beside it.
//!
//! A 6-pixel-wide greyscale strip is cut around the seam (seam between
//! strip columns 2 and 3), filtered with a 3x3 Scharr-type kernel, and each
//! row contributes `|r2| / (|r1| + c) + |r3| / (|r4| + c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub const STRIP_WIDTH: usize = 6;
pub const DEFAULT_C: f64 = 0.1;

/// Vertical smoothing profile shared by both kernels.
const SMOOTH: [f64; 3] = [3.0, 10.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DsKernel {
    /// `(3, 10, 3)^T (1, -2, 1)`
    #[default]
    ScharrSecondOrder,
    /// `(3, 10, 3)^T (-1, 0, 1)`
    ScharrFirstOrder,
}

impl DsKernel {
    fn row(self) -> [f64; 3] {
        match self {
            DsKernel::ScharrSecondOrder => [1.0, -2.0, 1.0],
            DsKernel::ScharrFirstOrder => [-1.0, 0.0, 1.0],
        }
    }

    /// Full 3x3 coefficients, row-major.
    pub fn coefficients(self) -> [[f64; 3]; 3] {
        let r = self.row();
        SMOOTH.map(|s| r.map(|x| s * x))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DsKernel::ScharrSecondOrder => "scharr-second-order",
            DsKernel::ScharrFirstOrder => "scharr-first-order",
        }
    }
}

impl std::str::FromStr for DsKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scharr-second-order" | "scharr2" | "second" => Ok(DsKernel::ScharrSecondOrder),
            "scharr-first-order" | "scharr1" | "first" => Ok(DsKernel::ScharrFirstOrder),
            _ => Err(Error::config(format!("unknown DS kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsConfig {
    pub kernel: DsKernel,
    pub c: f64,
}

impl Default for DsConfig {
    fn default() -> Self {
        DsConfig {
            kernel: DsKernel::default(),
            c: DEFAULT_C,
        }
    }
}

impl DsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::config(format!("DS stabilizer c must be > 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// `L x 6` greyscale values around one seam, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamStrip {
    values: Vec<[f64; STRIP_WIDTH]>,
    pub seam_id: usize,
}

impl SeamStrip {
    pub fn new(values: Vec<[f64; STRIP_WIDTH]>, seam_id: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("seam strip needs at least one row"));
        }
        if values.iter().flatten().any(|v| !(0.0..=255.0).contains(v)) {
            return Err(Error::input("seam strip intensities must lie in [0, 255]"));
        }
        Ok(SeamStrip { values, seam_id })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rows(&self) -> &[[f64; STRIP_WIDTH]] {
        &self.values
    }
}

/// The single seam of an equirectangular image: columns
/// `[W-3, W-2, W-1, 0, 1, 2]`, converted to BT.601 luma.
pub fn extract_seam_strips(img: &Image) -> Result<Vec<SeamStrip>> {
    let w = img.width();
    if w < STRIP_WIDTH {
        return Err(Error::input(format!(
            "image width {w} is narrower than the {STRIP_WIDTH}-pixel seam strip"
        )));
    }
    let luma = img.luma()?;
    let cols = [w - 3, w - 2, w - 1, 0, 1, 2];
    let values = (0..img.height())
        .map(|y| cols.map(|x| luma[y * w + x]))
        .collect();
    Ok(vec![SeamStrip { values, seam_id: 0 }])
}

/// Filter response for one strip. Only columns 1..=4 are meaningful; the
/// border columns are left at zero. Rows are padded by replication.
pub fn convolve_kernel(strip: &SeamStrip, cfg: &DsConfig) -> Vec<[f64; STRIP_WIDTH]> {
    let rows = strip.rows();
    let l = rows.len();
    let deriv = cfg.kernel.row();
    (0..l)
        .map(|y| {
            let up = &rows[y.saturating_sub(1)];
            let mid = &rows[y];
            let down = &rows[(y + 1).min(l - 1)];
            // smooth vertically first; `up + down` is symmetric so a vertical
            // flip of the strip reproduces every row bit for bit
            let smoothed: [f64; STRIP_WIDTH] =
                std::array::from_fn(|x| SMOOTH[0] * (up[x] + down[x]) + SMOOTH[1] * mid[x]);
            let mut out = [0.0; STRIP_WIDTH];
            for x in 1..STRIP_WIDTH - 1 {
                out[x] = deriv[0] * smoothed[x - 1]
                    + deriv[1] * smoothed[x]
                    + deriv[2] * smoothed[x + 1];
            }
            out
        })
        .collect()
}

/// Mean over rows of the two seam-side ratios, halved.
pub fn ds_strip(response: &[[f64; STRIP_WIDTH]], cfg: &DsConfig) -> f64 {
    let l = response.len();
    if l == 0 {
        return 0.0;
    }
    let term = |r: &[f64; STRIP_WIDTH]| {
        r[2].abs() / (r[1].abs() + cfg.c) + r[3].abs() / (r[4].abs() + cfg.c)
    };
    // fold mirrored rows pairwise so the total does not depend on row order
    let mut total = 0.0;
    for y in 0..l / 2 {
        total += term(&response[y]) + term(&response[l - 1 - y]);
    }
    if l % 2 == 1 {
        total += term(&response[l / 2]);
    }
    total / (2.0 * l as f64)
}

/// Image-level score: strip scores weighted by strip length over image height.
pub fn ds_image(img: &Image, cfg: &DsConfig) -> Result<f64> {
    cfg.validate()?;
    let strips = extract_seam_strips(img)?;
    let h = img.height() as f64;
    Ok(strips
        .iter()
        .map(|s| s.len() as f64 / h * ds_strip(&convolve_kernel(s, cfg), cfg))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileExemplar {
    pub percentile: u32,
    pub id: String,
    pub ds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsSummary {
    pub count: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
    /// Images at the 0th, 10th, ..., 100th percentile of DS.
    pub exemplars: Vec<PercentileExemplar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsDatasetReport {
    pub scores: Vec<(String, f64)>,
    pub summary: DsSummary,
}

/// Linear-interpolated quantile of sorted data (`q` in `[0, 1]`).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarizes precomputed per-image scores. Ties keep input order.
pub fn summarize(scores: &[(String, f64)]) -> Result<DsSummary> {
    if scores.is_empty() {
        return Err(Error::input("DS summary needs at least one image"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].1.total_cmp(&scores[b].1).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| scores[i].1).collect();
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let (q1, median, q3) = (
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
    );
    let exemplars = (0..=10)
        .map(|k| {
            let rank = ((k as f64 / 10.0) * (n - 1) as f64).round() as usize;
            let (id, ds) = &scores[order[rank]];
            PercentileExemplar {
                percentile: k * 10,
                id: id.clone(),
                ds: *ds,
            }
        })
        .collect();
    Ok(DsSummary {
        count: n,
        mean,
        q1,
        median,
        q3,
        iqr: q3 - q1,
        min: sorted[0],
        max: sorted[n - 1],
        exemplars,
    })
}

pub fn ds_dataset<'a>(
    images: impl IntoIterator<Item = (String, &'a Image)>,
    cfg: &DsConfig,
) -> Result<DsDatasetReport> {
    let scores = images
        .into_iter()
        .map(|(id, img)| Ok((id, ds_image(img, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&scores)?;
    Ok(DsDatasetReport { scores, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> DsConfig {
        DsConfig {
            kernel: DsKernel::ScharrFirstOrder,
            c: 0.1,
        }
    }

    fn strip(l: usize, f: impl Fn(usize) -> f64) -> SeamStrip {
        SeamStrip::new(vec![std::array::from_fn(f); l], 0).unwrap()
    }

    #[test]
    fn kernel_coefficients() {
        assert_eq!(
            DsKernel::ScharrFirstOrder.coefficients(),
            [[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]]
        );
        assert_eq!(
            DsKernel::ScharrSecondOrder.coefficients(),
            [[3.0, -6.0, 3.0], [10.0, -20.0, 10.0], [3.0, -6.0, 3.0]]
        );
    }

    #[test]
    fn zero_strip_zero_response() {
        let s = strip(7, |_| 0.0);
        for cfg in [first_order(), DsConfig::default()] {
            let r = convolve_kernel(&s, &cfg);
            assert!(r.iter().flatten().all(|&v| v == 0.0));
            assert_eq!(ds_strip(&r, &cfg), 0.0);
        }
    }

    #[test]
    fn step_edge_hand_values() {
        let s = strip(9, |x| if x >= 3 { 255.0 } else { 0.0 });
        let r = convolve_kernel(&s, &first_order());
        for row in &r {
            assert_eq!(row[2], 4080.0);
            assert_eq!(row[3], 4080.0);
            assert_eq!(row[1], 0.0);
            assert_eq!(row[4], 0.0);
        }
        assert!((ds_strip(&r, &first_order()) - 40800.0).abs() <= 40800.0 * 1e-12);
        // the second-difference kernel sees the same magnitudes at the seam
        let r2 = convolve_kernel(&s, &DsConfig::default());
        assert_eq!((r2[0][2].abs(), r2[0][3].abs()), (4080.0, 4080.0));
        assert_eq!((r2[0][1], r2[0][4]), (0.0, 0.0));
    }

    #[test]
    fn ramp_hand_values() {
        let s = strip(5, |x| 10.0 * x as f64);
        let r = convolve_kernel(&s, &first_order());
        for row in &r {
            assert_eq!(&row[1..5], &[320.0; 4]);
        }
        let want = 320.0 / 320.1;
        assert!((ds_strip(&r, &first_order()) - want).abs() <= want * 1e-12);
        // a linear ramp has no second difference
        assert_eq!(ds_strip(&convolve_kernel(&s, &DsConfig::default()), &DsConfig::default()), 0.0);
    }

    #[test]
    fn strip_index_mapping() {
        let img = Image::from_fn(16, 8, |x, _| if x < 8 { [200.0; 3] } else { [50.0; 3] });
        let strips = extract_seam_strips(&img).unwrap();
        assert_eq!(strips.len(), 1);
        for row in strips[0].rows() {
            for (x, v) in row.iter().enumerate() {
                let want = if x < 3 { 50.0 } else { 200.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
        let big = Image::filled(1024, 512, [3.0, 4.0, 5.0]);
        let strips = extract_seam_strips(&big).unwrap();
        assert_eq!(strips[0].len(), 512);
        assert!(extract_seam_strips(&Image::filled(5, 3, [0.0; 3])).is_err());
    }

    #[test]
    fn constant_image_scores_zero() {
        let img = Image::filled(64, 32, [17.0, 99.0, 240.0]);
        assert_eq!(ds_image(&img, &DsConfig::default()).unwrap(), 0.0);
        assert_eq!(ds_image(&img, &first_order()).unwrap(), 0.0);
    }

    #[test]
    fn image_score_equals_strip_score() {
        let img = Image::from_fn(32, 16, |x, y| [((x * 13 + y * 7) % 200) as f64; 3]);
        let cfg = DsConfig::default();
        let s = &extract_seam_strips(&img).unwrap()[0];
        assert_eq!(ds_image(&img, &cfg).unwrap(), ds_strip(&convolve_kernel(s, &cfg), &cfg));
    }

    #[test]
    fn half_turn_reveals_hidden_seam() {
        // sawtooth whose only jump sits in the middle column; the seam itself is smooth
        let img = Image::from_fn(64, 32, |x, _| [40.0 + 140.0 * ((x + 32) % 64) as f64 / 63.0; 3]);
        for cfg in [DsConfig::default(), first_order()] {
            let hidden = ds_image(&img, &cfg).unwrap();
            let revealed = ds_image(&img.roll_horizontal(32), &cfg).unwrap();
            assert!(hidden <= 1.1, "{hidden}");
            assert!(revealed > 10.0 * hidden.max(0.1), "{revealed} vs {hidden}");
        }
    }

    #[test]
    fn rejects_non_positive_c() {
        let img = Image::filled(8, 4, [1.0; 3]);
        let cfg = DsConfig {
            kernel: DsKernel::ScharrSecondOrder,
            c: 0.0,
        };
        assert!(ds_image(&img, &cfg).is_err());
    }

    #[test]
    fn summary_percentiles() {
        let scores: Vec<(String, f64)> = (0..11).rev().map(|i| (format!("img{i}"), i as f64)).collect();
        let s = summarize(&scores).unwrap();
        assert_eq!(s.count, 11);
        assert_eq!(s.mean, 5.0);
        assert_eq!((s.q1, s.median, s.q3, s.iqr), (2.5, 5.0, 7.5, 5.0));
        let ids: Vec<&str> = s.exemplars.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, (0..11).map(|i| format!("img{i}")).collect::<Vec<_>>());
        assert_eq!(s.exemplars[10].percentile, 100);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in [DsKernel::ScharrFirstOrder, DsKernel::ScharrSecondOrder] {
            assert_eq!(k.as_str().parse::<DsKernel>().unwrap(), k);
        }
        assert!("sobel".parse::<DsKernel>().is_err());
    }
}
