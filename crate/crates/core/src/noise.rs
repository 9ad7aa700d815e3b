//! Multiplicative L-look speckle synthesis.
//!
//! Each pixel is multiplied by an independent `Gamma(L, 1/L)` variate (unit
//! mean, variance `1/L`). The generator is ChaCha8 seeded from a `u64`, which
//! keeps the stream identical across platforms and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Number of looks and generator seed for one noise realisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub looks: u32,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(looks: u32, seed: u64) -> Result<Self> {
        if looks == 0 {
            return Err(Error::param("looks", "must be at least 1"));
        }
        Ok(Self { looks, seed })
    }
}

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One gamma variate with the given shape and scale.
pub fn gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    Ok(gamma(shape, scale)?.sample(rng))
}

fn gamma(shape: f64, scale: f64) -> Result<Gamma<f64>> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::param("shape", format!("must be positive, got {shape}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param("scale", format!("must be positive, got {scale}")));
    }
    Gamma::new(shape, scale).map_err(|e| Error::param("shape", e.to_string()))
}

/// The raw multiplier field drawn for `spec`, in row-major order.
pub fn speckle_multipliers(len: usize, spec: NoiseSpec) -> Result<Vec<f64>> {
    let spec = NoiseSpec::new(spec.looks, spec.seed)?;
    let looks = f64::from(spec.looks);
    let dist = gamma(looks, 1.0 / looks)?;
    let mut rng = rng_from_seed(spec.seed);
    Ok((0..len).map(|_| dist.sample(&mut rng)).collect())
}

/// `I0 = I * n` with `n ~ Gamma(L, 1/L)` drawn independently per pixel.
pub fn apply_speckle(img: &ImageGrid, spec: NoiseSpec) -> Result<ImageGrid> {
    let noise = speckle_multipliers(img.len(), spec)?;
    let data = img.data().iter().zip(noise).map(|(v, n)| (v * n).max(0.0)).collect();
    img.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn zero_looks_rejected() {
        assert!(NoiseSpec::new(0, 1).is_err());
        let img = ImageGrid::filled(4, 4, 1.0, 255.0).unwrap();
        assert!(apply_speckle(&img, NoiseSpec { looks: 0, seed: 1 }).is_err());
    }

    #[test]
    fn zero_image_stays_zero() {
        let img = ImageGrid::filled(8, 8, 0.0, 255.0).unwrap();
        let out = apply_speckle(&img, NoiseSpec::new(3, 9).unwrap()).unwrap();
        assert!(out.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        let mut rng = rng_from_seed(0);
        assert!(gamma_draw(0.0, 1.0, &mut rng).is_err());
        assert!(gamma_draw(1.0, -1.0, &mut rng).is_err());
        assert!(gamma_draw(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn exponential_moment() {
        let mut rng = rng_from_seed(7);
        let xs: Vec<f64> = (0..100_000).map(|_| gamma_draw(1.0, 1.0, &mut rng).unwrap()).collect();
        let (mean, _) = mean_var(&xs);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn unit_mean_for_looks() {
        for looks in [1.0, 3.0, 5.0, 10.0, 33.0] {
            let mut rng = rng_from_seed(11);
            let xs: Vec<f64> = (0..100_000)
                .map(|_| gamma_draw(looks, 1.0 / looks, &mut rng).unwrap())
                .collect();
            let (mean, _) = mean_var(&xs);
            assert!((mean - 1.0).abs() < 0.01, "L={looks}: mean {mean}");
        }
    }

    #[test]
    fn seeded_stream_repeats() {
        let draw = || {
            let mut rng = rng_from_seed(123);
            (0..100)
                .map(|_| gamma_draw(2.5, 0.4, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn constant_scene_mean() {
        let img = ImageGrid::filled(256, 256, 100.0, 255.0).unwrap();
        let out = apply_speckle(&img, NoiseSpec::new(10, 42).unwrap()).unwrap();
        let (mean, _) = mean_var(out.data());
        assert!((99.0..=101.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn variance_per_look() {
        let img = ImageGrid::filled(256, 256, 1.0, 1.0).unwrap();
        for looks in [1, 3, 5, 10, 33] {
            let out = apply_speckle(&img, NoiseSpec::new(looks, 2024).unwrap()).unwrap();
            let (_, var) = mean_var(out.data());
            let target = 1.0 / f64::from(looks);
            assert!((var / target - 1.0).abs() < 0.05, "L={looks}: var {var}");
        }
    }

    #[test]
    fn identical_spec_identical_output() {
        let img = ImageGrid::from_fn(32, 16, 255.0, |x, y| (x + y) as f64).unwrap();
        let spec = NoiseSpec::new(5, 77).unwrap();
        assert_eq!(apply_speckle(&img, spec).unwrap(), apply_speckle(&img, spec).unwrap());
        let other = apply_speckle(&img, NoiseSpec::new(5, 78).unwrap()).unwrap();
        assert_ne!(apply_speckle(&img, spec).unwrap(), other);
    }
}
