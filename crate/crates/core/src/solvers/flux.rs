//! Divergence operators for the diffusion terms.
//!
//! The default discretisation is conservative: fluxes live on the faces between
//! neighbouring pixels, the normal derivative on a face is the one-sided
//! difference across it, and the tangential derivative is the mean of the two
//! adjacent central differences. Border faces carry zero flux (replicated ghost
//! layer), so the divergence field sums to zero over the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fuzzy::EdgeIndicatorField;
use crate::image::ImageGrid;

/// How `div(c * grad I)`-type terms are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxScheme {
    /// Face fluxes with zero flux through the border.
    #[default]
    Conservative,
    /// Central difference of cell-centred fluxes built from central
    /// differences, as in the literal nested stencil.
    NestedCentral,
}

impl std::str::FromStr for FluxScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(FluxScheme::Conservative),
            "nested-central" => Ok(FluxScheme::NestedCentral),
            other => Err(Error::param("flux", format!("unknown flux scheme `{other}`"))),
        }
    }
}

/// Gradient sampled on a face between pixels `a` and `b` (linear indices).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Face {
    pub normal: f64,
    pub tangential: f64,
    pub a: usize,
    pub b: usize,
}

impl Face {
    #[inline]
    pub fn magnitude_sq(&self) -> f64 {
        self.normal * self.normal + self.tangential * self.tangential
    }
}

/// Divergence of the face flux returned by `flux`.
pub(crate) fn conservative_divergence<F>(img: &ImageGrid, flux: F) -> Vec<f64>
where
    F: Fn(&Face) -> f64 + Sync,
{
    let (w, h) = (img.width(), img.height());
    // fx[y * w + x]: flux through the face between (x, y) and (x + 1, y).
    let mut fx = vec![0.0; w * h];
    // fy[y * w + x]: flux through the face between (x, y) and (x, y + 1).
    let mut fy = vec![0.0; w * h];
    fx.par_chunks_mut(w)
        .zip(fy.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row_x, row_y))| {
            let yi = y as isize;
            for x in 0..w {
                let xi = x as isize;
                let here = y * w + x;
                if x + 1 < w {
                    let face = Face {
                        normal: img.ghost(xi + 1, yi) - img.ghost(xi, yi),
                        tangential: 0.25
                            * (img.ghost(xi, yi + 1) - img.ghost(xi, yi - 1) + img.ghost(xi + 1, yi + 1)
                                - img.ghost(xi + 1, yi - 1)),
                        a: here,
                        b: here + 1,
                    };
                    row_x[x] = flux(&face);
                }
                if y + 1 < h {
                    let face = Face {
                        normal: img.ghost(xi, yi + 1) - img.ghost(xi, yi),
                        tangential: 0.25
                            * (img.ghost(xi + 1, yi) - img.ghost(xi - 1, yi) + img.ghost(xi + 1, yi + 1)
                                - img.ghost(xi - 1, yi + 1)),
                        a: here,
                        b: here + w,
                    };
                    row_y[x] = flux(&face);
                }
            }
        });
    let mut div = vec![0.0; w * h];
    div.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, d) in row.iter_mut().enumerate() {
            let i = y * w + x;
            let west = if x > 0 { fx[i - 1] } else { 0.0 };
            let north = if y > 0 { fy[i - w] } else { 0.0 };
            *d = (fx[i] - west) + (fy[i] - north);
        }
    });
    div
}

/// Central difference of a cell-centred flux `(vx, vy) = flux(i, gx, gy)`.
pub(crate) fn nested_divergence<F>(img: &ImageGrid, flux: F) -> Vec<f64>
where
    F: Fn(usize, f64, f64) -> (f64, f64) + Sync,
{
    let (w, h) = (img.width(), img.height());
    let mut vx = vec![0.0; w * h];
    let mut vy = vec![0.0; w * h];
    vx.par_chunks_mut(w)
        .zip(vy.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (rx, ry))| {
            let yi = y as isize;
            for x in 0..w {
                let xi = x as isize;
                let gx = 0.5 * (img.ghost(xi + 1, yi) - img.ghost(xi - 1, yi));
                let gy = 0.5 * (img.ghost(xi, yi + 1) - img.ghost(xi, yi - 1));
                (rx[x], ry[x]) = flux(y * w + x, gx, gy);
            }
        });
    let at = |v: &[f64], x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        v[yc * w + xc]
    };
    let mut div = vec![0.0; w * h];
    div.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let yi = y as isize;
        for (x, d) in row.iter_mut().enumerate() {
            let xi = x as isize;
            *d = 0.5 * (at(&vx, xi + 1, yi) - at(&vx, xi - 1, yi)) + 0.5 * (at(&vy, xi, yi + 1) - at(&vy, xi, yi - 1));
        }
    });
    div
}

/// `div(c * grad I / |grad I|_eps)` with a per-pixel weight `c`
/// (arithmetic mean on faces) and `|g|_eps = sqrt(|g|² + eps²)`.
pub fn weighted_tv_divergence(img: &ImageGrid, weight: &[f64], eps_tv: f64, scheme: FluxScheme) -> Result<Vec<f64>> {
    check_len("weight", weight.len(), img.len())?;
    if !(eps_tv.is_finite() && eps_tv > 0.0) {
        return Err(Error::param("eps_tv", format!("must be positive, got {eps_tv}")));
    }
    let eps2 = eps_tv * eps_tv;
    Ok(match scheme {
        FluxScheme::Conservative => conservative_divergence(img, |f| {
            0.5 * (weight[f.a] + weight[f.b]) * f.normal / (f.magnitude_sq() + eps2).sqrt()
        }),
        FluxScheme::NestedCentral => nested_divergence(img, |i, gx, gy| {
            let s = weight[i] / (gx * gx + gy * gy + eps2).sqrt();
            (s * gx, s * gy)
        }),
    })
}

/// `div(c * grad I)` with a per-pixel coefficient `c`.
pub fn weighted_divergence(img: &ImageGrid, coeff: &[f64], scheme: FluxScheme) -> Result<Vec<f64>> {
    check_len("coeff", coeff.len(), img.len())?;
    Ok(match scheme {
        FluxScheme::Conservative => conservative_divergence(img, |f| 0.5 * (coeff[f.a] + coeff[f.b]) * f.normal),
        FluxScheme::NestedCentral => nested_divergence(img, |i, gx, gy| (coeff[i] * gx, coeff[i] * gy)),
    })
}

/// Conservative `div(theta * grad I / |grad I|_eps)`.
pub fn tv_divergence(img: &ImageGrid, theta: &EdgeIndicatorField, eps_tv: f64) -> Result<Vec<f64>> {
    crate::image::check_dims((img.width(), img.height()), (theta.width, theta.height))?;
    weighted_tv_divergence(img, theta.values(), eps_tv, FluxScheme::Conservative)
}
