//! Brute-force reference implementations used as test oracles. They favour
//! obviousness over speed: explicit padding, explicit windows, no shared code
//! with the library beyond the image container.

#![allow(dead_code, clippy::needless_range_loop)]

use despeckle::image::ImageGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(w: usize, h: usize, lo: f64, hi: f64, seed: u64) -> ImageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h).map(|_| rng.random_range(lo..hi)).collect();
    ImageGrid::new(w, h, data, 255.0).unwrap()
}

/// Half-sample symmetric padding built by repeated folding: index -1 maps to 0,
/// -2 to 1, n to n-1, and so on.
pub fn fold(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

pub fn padded(img: &ImageGrid, pad: usize) -> (Vec<Vec<f64>>, usize) {
    let (w, h) = (img.width(), img.height());
    let p = pad as isize;
    let grid = (-p..h as isize + p)
        .map(|y| (-p..w as isize + p).map(|x| img.get(fold(x, w), fold(y, h))).collect())
        .collect();
    (grid, pad)
}

pub fn gaussian_2d(xi: f64, r: usize) -> Vec<Vec<f64>> {
    let r = r as isize;
    let mut k: Vec<Vec<f64>> = (-r..=r)
        .map(|b| {
            (-r..=r)
                .map(|a| (-((a * a + b * b) as f64) / (2.0 * xi * xi)).exp())
                .collect()
        })
        .collect();
    let total: f64 = k.iter().flatten().sum();
    for row in &mut k {
        for v in row {
            *v /= total;
        }
    }
    k
}

pub fn convolve_oracle(img: &ImageGrid, kernel: &[Vec<f64>]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let (pad, off) = padded(img, r);
    let mut out = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let mut acc = 0.0;
            for (b, krow) in kernel.iter().enumerate() {
                for (a, kw) in krow.iter().enumerate() {
                    acc += kw * pad[y + off + b - r][x + off + a - r];
                }
            }
            out.push(acc);
        }
    }
    out
}

fn clamped(img: &ImageGrid, x: isize, y: isize) -> f64 {
    let cx = x.max(0).min(img.width() as isize - 1) as usize;
    let cy = y.max(0).min(img.height() as isize - 1) as usize;
    img.get(cx, cy)
}

pub fn gradient_oracle(img: &ImageGrid) -> (Vec<f64>, Vec<f64>) {
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            dx.push((clamped(img, x + 1, y) - clamped(img, x - 1, y)) / 2.0);
            dy.push((clamped(img, x, y + 1) - clamped(img, x, y - 1)) / 2.0);
        }
    }
    (dx, dy)
}

/// Face-flux divergence written pixel by pixel: four faces, zero flux through
/// the outer border.
pub fn tv_divergence_oracle(img: &ImageGrid, theta: &[f64], eps: f64) -> Vec<f64> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let u = |x: isize, y: isize| clamped(img, x, y);
    let th = |x: isize, y: isize| theta[(y * w + x) as usize];
    // Flux from (x, y) to (x + 1, y).
    let east = |x: isize, y: isize| {
        if x + 1 >= w {
            return 0.0;
        }
        let n = u(x + 1, y) - u(x, y);
        let t = ((u(x, y + 1) - u(x, y - 1)) / 2.0 + (u(x + 1, y + 1) - u(x + 1, y - 1)) / 2.0) / 2.0;
        (th(x, y) + th(x + 1, y)) / 2.0 * n / (n * n + t * t + eps * eps).sqrt()
    };
    // Flux from (x, y) to (x, y + 1).
    let south = |x: isize, y: isize| {
        if y + 1 >= h {
            return 0.0;
        }
        let n = u(x, y + 1) - u(x, y);
        let t = ((u(x + 1, y) - u(x - 1, y)) / 2.0 + (u(x + 1, y + 1) - u(x - 1, y + 1)) / 2.0) / 2.0;
        (th(x, y) + th(x, y + 1)) / 2.0 * n / (n * n + t * t + eps * eps).sqrt()
    };
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let west = if x > 0 { east(x - 1, y) } else { 0.0 };
            let north = if y > 0 { south(x, y - 1) } else { 0.0 };
            out.push(east(x, y) - west + south(x, y) - north);
        }
    }
    out
}

/// SSIM averaged over every fully contained window, each window evaluated
/// from scratch with 2-D Gaussian weights and centred moments.
pub fn mssim_oracle(a: &ImageGrid, b: &ImageGrid, win: usize) -> f64 {
    let sigma: f64 = 1.5;
    let r = (win / 2) as isize;
    let mut wts = vec![vec![0.0; win]; win];
    let mut total = 0.0;
    for j in 0..win {
        for i in 0..win {
            let (dx, dy) = (i as isize - r, j as isize - r);
            wts[j][i] = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            total += wts[j][i];
        }
    }
    let l = a.max_level();
    let c1 = (0.01 * l) * (0.01 * l);
    let c2 = (0.03 * l) * (0.03 * l);
    let mut sum = 0.0;
    let mut count = 0;
    for y0 in 0..=a.height() - win {
        for x0 in 0..=a.width() - win {
            let mut mx = 0.0;
            let mut my = 0.0;
            for j in 0..win {
                for i in 0..win {
                    let w = wts[j][i] / total;
                    mx += w * a.get(x0 + i, y0 + j);
                    my += w * b.get(x0 + i, y0 + j);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for j in 0..win {
                for i in 0..win {
                    let w = wts[j][i] / total;
                    let da = a.get(x0 + i, y0 + j) - mx;
                    let db = b.get(x0 + i, y0 + j) - my;
                    vx += w * da * da;
                    vy += w * db * db;
                    cxy += w * da * db;
                }
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Mean of local population std / mean over `win x win` symmetric windows.
pub fn speckle_index_oracle(img: &ImageGrid, win: usize) -> f64 {
    let r = win / 2;
    let (pad, off) = padded(img, r);
    let mut total = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let vals: Vec<f64> = (0..win)
                .flat_map(|j| (0..win).map(move |i| (i, j)))
                .map(|(i, j)| pad[y + off + j - r][x + off + i - r])
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            if mean <= 0.0 {
                continue;
            }
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            total += var.sqrt() / mean;
        }
    }
    total / img.len() as f64
}

/// Closed-form divergence evaluated directly from its definition as a sum of
/// the two one-sided exponential terms.
pub fn divergence_oracle(p: f64, q: f64) -> f64 {
    let one = 1.0 - (1.0 - p + q) * (p - q).exp();
    let two = 1.0 - (1.0 - q + p) * (q - p).exp();
    one + two
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
