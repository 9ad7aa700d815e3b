//! Image container, boundary handling, Gaussian smoothing and finite-difference
//! gradients shared by every filter in the crate.
//!
//! Pixels are addressed as `(x, y)` with `x` the column and `y` the row; data is
//! stored row-major. Stencils see one ghost layer that replicates the nearest
//! border pixel, which is the discrete form of a zero normal derivative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense grayscale field of nonnegative intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
    max_level: f64,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>, max_level: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if !(max_level.is_finite() && max_level > 0.0) {
            return Err(Error::InvalidImage(format!(
                "max_level must be positive and finite, got {max_level}"
            )));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidImage(format!(
                "intensity {v} at ({}, {}) is not a finite nonnegative value",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            max_level,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64, max_level: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], max_level)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        max_level: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, max_level)
    }

    /// Builds a grid from data already known to satisfy the invariants.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>, max_level: f64) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self {
            width,
            height,
            data,
            max_level,
        }
    }

    /// Same shape and ceiling, new samples.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, data, self.max_level)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Stencil access with one replicated ghost layer. Callers never step more
    /// than one pixel outside, so clamping coincides with replication.
    #[inline]
    pub(crate) fn ghost(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &ImageGrid) -> Result<()> {
        check_dims((self.width, self.height), (other.width, other.height))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch {
            left_w: left.0,
            left_h: left.1,
            right_w: right.0,
            right_h: right.1,
        });
    }
    Ok(())
}

/// Reads `(x, y)` with the symmetric boundary rule: one ghost pixel on each side
/// replicates its in-range neighbour (`I[-1] = I[0]`, `I[n] = I[n-1]`).
pub fn reflect_sample(img: &ImageGrid, x: isize, y: isize) -> Result<f64> {
    let (w, h) = (img.width as isize, img.height as isize);
    if x < -1 || x > w || y < -1 || y > h {
        return Err(Error::OutOfRange {
            x,
            y,
            width: img.width,
            height: img.height,
        });
    }
    Ok(img.ghost(x, y))
}

/// Half-sample symmetric extension of an index to any depth. Agrees with
/// [`reflect_sample`] on the first ghost layer.
#[inline]
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = i.rem_euclid(2 * n);
    (if r < n { r } else { 2 * n - 1 - r }) as usize
}

/// Square convolution kernel of side `2 * radius + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::param(
                "weights",
                format!("expected {} weights for radius {radius}", side * side),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", format!("weights sum to {total}, not 1")));
        }
        let n = weights.len();
        if (0..n).any(|i| weights[i] != weights[n - 1 - i]) {
            return Err(Error::param("weights", "kernel is not centrally symmetric"));
        }
        Ok(Self { radius, weights })
    }

    /// The identity kernel.
    pub fn delta() -> Self {
        Self {
            radius: 0,
            weights: vec![1.0],
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(a, b)`, each in `-radius..=radius`.
    pub fn weight(&self, a: isize, b: isize) -> f64 {
        let r = self.radius as isize;
        let side = 2 * r + 1;
        self.weights[((b + r) * side + (a + r)) as usize]
    }
}

/// Default truncation radius for a Gaussian of width `xi`: `ceil(3 xi)`.
pub fn default_radius(xi: f64) -> usize {
    ((3.0 * xi).ceil() as usize).max(1)
}

/// Sampled Gaussian `exp(-(a² + b²) / (2 xi²))` on a `(2r+1)²` footprint,
/// renormalised to unit sum.
pub fn gaussian_kernel(xi: f64, radius: usize) -> Result<Kernel2D> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::param("xi", format!("must be positive, got {xi}")));
    }
    if radius == 0 {
        return Err(Error::param("radius", "must be at least 1"));
    }
    let r = radius as isize;
    let two_var = 2.0 * xi * xi;
    let mut weights = Vec::with_capacity((2 * radius + 1).pow(2));
    for b in -r..=r {
        for a in -r..=r {
            weights.push((-((a * a + b * b) as f64) / two_var).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    // Exact central symmetry regardless of summation order.
    let n = weights.len();
    for i in 0..n / 2 {
        weights[n - 1 - i] = weights[i];
    }
    Ok(Kernel2D { radius, weights })
}

/// Direct 2-D convolution with symmetric boundary extension.
pub fn convolve(img: &ImageGrid, k: &Kernel2D) -> ImageGrid {
    let (w, h) = (img.width, img.height);
    let r = k.radius as isize;
    let side = (2 * r + 1) as usize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in -r..=r {
                let sy = mirror_index(y as isize + b, h);
                let src = &img.data[sy * w..(sy + 1) * w];
                let krow = &k.weights[((b + r) as usize) * side..][..side];
                for (a, kw) in (-r..=r).zip(krow) {
                    acc += kw * src[mirror_index(x as isize + a, w)];
                }
            }
            *px = acc;
        }
    });
    ImageGrid::from_parts(w, h, out, img.max_level)
}

/// Per-pixel pair of partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl VectorField {
    pub fn magnitude(&self) -> Vec<f64> {
        self.dx.iter().zip(&self.dy).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// Central differences `(I[i+1] - I[i-1]) / 2h` with replicated borders.
pub fn central_gradient(img: &ImageGrid, h: f64) -> Result<VectorField> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", format!("must be positive, got {h}")));
    }
    let (w, hgt) = (img.width, img.height);
    let mut dx = vec![0.0; w * hgt];
    let mut dy = vec![0.0; w * hgt];
    let inv = 1.0 / (2.0 * h);
    for y in 0..hgt {
        let yi = y as isize;
        for x in 0..w {
            let xi = x as isize;
            let i = y * w + x;
            dx[i] = (img.ghost(xi + 1, yi) - img.ghost(xi - 1, yi)) * inv;
            dy[i] = (img.ghost(xi, yi + 1) - img.ghost(xi, yi - 1)) * inv;
        }
    }
    Ok(VectorField {
        width: w,
        height: hgt,
        dx,
        dy,
    })
}
