//! Full-reference (PSNR, MSSIM) and no-reference (speckle index) quality
//! measures, the ratio image and line profiles.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{mirror_index, ImageGrid};
use crate::solvers::POSITIVITY_FLOOR;

/// Gaussian weighting of the MSSIM window.
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const DEFAULT_SSIM_WINDOW: usize = 11;
pub const DEFAULT_SI_WINDOW: usize = 3;

/// Display ceiling of ratio images: a ratio of 2 maps to white.
pub const RATIO_CEILING: f64 = 2.0;

/// `10 log10(max_level² / MSE)`; identical images give `+inf`.
pub fn psnr(reference: &ImageGrid, test: &ImageGrid) -> Result<f64> {
    reference.check_shape(test)?;
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max_level();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Normalised 1-D Gaussian of odd length `window`.
pub(crate) fn gaussian_window(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as isize;
    let mut g: Vec<f64> = (-r..=r)
        .map(|a| (-((a * a) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = g.iter().sum();
    for v in &mut g {
        *v /= total;
    }
    g
}

/// Separable weighted sums over every fully contained window.
fn valid_filter(data: &[f64], w: usize, h: usize, g: &[f64]) -> Vec<f64> {
    let win = g.len();
    let (ow, oh) = (w + 1 - win, h + 1 - win);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = g.iter().zip(&src[x..x + win]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = g.iter().enumerate().map(|(j, k)| k * rows[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully contained Gaussian-weighted windows
/// (`sigma = 1.5`, `C1 = (0.01 L)²`, `C2 = (0.03 L)²` with `L = max_level`).
pub fn mssim(reference: &ImageGrid, test: &ImageGrid, window: usize) -> Result<f64> {
    reference.check_shape(test)?;
    let (w, h) = (reference.width(), reference.height());
    if window.is_multiple_of(2) {
        return Err(Error::param("window", format!("must be odd, got {window}")));
    }
    if window > w.min(h) {
        return Err(Error::param(
            "window",
            format!("{window} exceeds the smaller image side {}", w.min(h)),
        ));
    }
    let peak = reference.max_level();
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let g = gaussian_window(window, SSIM_SIGMA);
    let x = reference.data();
    let y = test.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = valid_filter(x, w, h, &g);
    let my = valid_filter(y, w, h, &g);
    let sxx = valid_filter(&xx, w, h, &g);
    let syy = valid_filter(&yy, w, h, &g);
    let sxy = valid_filter(&xy, w, h, &g);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            ssim_value(
                mx[i],
                my[i],
                sxx[i] - mx[i] * mx[i],
                syy[i] - my[i] * my[i],
                sxy[i] - mx[i] * my[i],
                c1,
                c2,
            )
        })
        .sum();
    Ok(total / n as f64)
}

#[inline]
pub(crate) fn ssim_value(mx: f64, my: f64, vx: f64, vy: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Mean over pixels of the local coefficient of variation (population standard
/// deviation over mean) in a `window x window` neighbourhood with symmetric
/// borders. Pixels whose local mean is below the positivity guard count as 0.
pub fn speckle_index(img: &ImageGrid, window: usize) -> Result<f64> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param(
            "window",
            format!("must be a positive odd integer, got {window}"),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let r = (window / 2) as isize;
    let n = (window * window) as f64;
    let floor = POSITIVITY_FLOOR * img.max_level();
    let mut vals = Vec::with_capacity(window * window);
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            vals.clear();
            for b in -r..=r {
                let sy = mirror_index(y as isize + b, h);
                for a in -r..=r {
                    vals.push(img.get(mirror_index(x as isize + a, w), sy));
                }
            }
            // Two passes: centred moments avoid cancellation on flat patches.
            let mean = vals.iter().sum::<f64>() / n;
            if mean < floor {
                continue;
            }
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            total += var.sqrt() / mean;
        }
    }
    Ok(total / (w * h) as f64)
}

/// The default MSSIM window, shrunk to the largest odd size that fits `img`.
pub fn fitted_ssim_window(img: &ImageGrid) -> usize {
    let side = img.width().min(img.height());
    let fit = if side % 2 == 1 { side } else { side - 1 };
    DEFAULT_SSIM_WINDOW.min(fit)
}

/// Pointwise `noisy / restored`, with `restored` floored at the positivity guard.
pub fn ratio_image(noisy: &ImageGrid, restored: &ImageGrid) -> Result<ImageGrid> {
    noisy.check_shape(restored)?;
    let floor = POSITIVITY_FLOOR * restored.max_level();
    let data = noisy
        .data()
        .iter()
        .zip(restored.data())
        .map(|(n, r)| n / r.max(floor))
        .collect();
    ImageGrid::new(noisy.width(), noisy.height(), data, RATIO_CEILING)
}

/// `(column, intensity)` pairs along `row`.
pub fn line_profile(img: &ImageGrid, row: usize) -> Result<Vec<(usize, f64)>> {
    if row >= img.height() {
        return Err(Error::param(
            "row",
            format!("{row} out of range for height {}", img.height()),
        ));
    }
    Ok((0..img.width()).map(|x| (x, img.get(x, row))).collect())
}

fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Quality summary of one restored image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    pub mssim: f64,
    pub speckle_index: f64,
    pub iterations: usize,
    /// Omitted from serialised output when not recorded, so reports of
    /// identical runs compare byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
    /// Reserved for a no-reference naturalness score.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brisque: Option<f64>,
}

impl MetricsReport {
    /// PSNR, MSSIM (default window) and speckle index of `restored` against `clean`.
    pub fn evaluate(clean: &ImageGrid, restored: &ImageGrid, iterations: usize) -> Result<Self> {
        Ok(Self {
            psnr_db: psnr(clean, restored)?,
            mssim: mssim(clean, restored, fitted_ssim_window(clean))?,
            speckle_index: speckle_index(restored, DEFAULT_SI_WINDOW)?,
            iterations,
            wall_seconds: None,
            brisque: None,
        })
    }
}
