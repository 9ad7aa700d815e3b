use crate::error::{Error, Result};
use crate::image::{convolve, default_radius, gaussian_kernel, ImageGrid};

use super::flux::weighted_tv_divergence;
use super::{check_positive_input, finish_step, iterate_floor, run_loop, Monitor, RunLog, SolverParams};

/// Gray-level indicator
/// `alpha = (1 - 1 / (1 + k (G * I0)²)) (1 + k M²) / (k M²)` with
/// `M = max(G * I0)`. Both `k` and the intensities are in the image's units.
/// The result lies in `[0, 1]` and is returned on a unit ceiling.
pub fn gray_level_indicator(i0: &ImageGrid, k: f64, xi: f64) -> Result<ImageGrid> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    let smoothed = convolve(i0, &gaussian_kernel(xi, default_radius(xi))?);
    let peak = smoothed.max_value();
    if peak <= 0.0 {
        return Err(Error::DegenerateInput(
            "gray-level indicator needs a nonzero image".into(),
        ));
    }
    let km2 = k * peak * peak;
    let scale = (1.0 + km2) / km2;
    let alpha = smoothed
        .data()
        .iter()
        .map(|c| ((1.0 - 1.0 / (1.0 + k * c * c)) * scale).clamp(0.0, 1.0))
        .collect();
    ImageGrid::new(i0.width(), i0.height(), alpha, 1.0)
}

/// Convex TV baseline evolved by explicit gradient descent:
/// `I_t = div(alpha grad I / |grad I|_eps) - lambda (1 - I0 / I)`, with `alpha`
/// computed once from `i0`.
pub fn run_dong(i0: &ImageGrid, p: &SolverParams) -> Result<(ImageGrid, RunLog)> {
    run_dong_monitored(i0, p, None)
}

pub(super) fn run_dong_monitored(
    i0: &ImageGrid,
    p: &SolverParams,
    monitor: Option<Monitor<'_>>,
) -> Result<(ImageGrid, RunLog)> {
    p.validate()?;
    check_positive_input(i0, p.lambda_fid)?;
    let m = i0.max_level();
    let alpha = gray_level_indicator(i0, p.k_gray / (m * m), p.xi)?;
    let obs = i0.data();
    run_loop(i0, p, monitor, |state| {
        let lambda = p.lambda_at(state.iteration);
        let div = weighted_tv_divergence(&state.curr, alpha.data(), p.eps_tv * m, p.flux)?;
        let curr = state.curr.data();
        let next = curr
            .iter()
            .zip(&div)
            .zip(obs)
            .map(|((u, d), f)| {
                let fidelity = if lambda > 0.0 { lambda * (1.0 - f / u) } else { 0.0 };
                u + p.tau * m * (d - fidelity)
            })
            .collect();
        finish_step(state, next, iterate_floor(i0, lambda))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_unit_alpha() {
        let i0 = ImageGrid::filled(10, 10, 80.0, 255.0).unwrap();
        let alpha = gray_level_indicator(&i0, 1e-3, 1.0).unwrap();
        assert!(alpha.data().iter().all(|a| (a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn degenerate_and_bad_params() {
        let zero = ImageGrid::filled(5, 5, 0.0, 255.0).unwrap();
        assert!(matches!(
            gray_level_indicator(&zero, 1e-3, 1.0),
            Err(Error::DegenerateInput(_))
        ));
        let one = ImageGrid::filled(5, 5, 1.0, 255.0).unwrap();
        assert!(gray_level_indicator(&one, 0.0, 1.0).is_err());
        assert!(gray_level_indicator(&one, 1.0, 0.0).is_err());
    }

    #[test]
    fn constant_input_is_fixed_point() {
        let i0 = ImageGrid::filled(8, 8, 64.0, 255.0).unwrap();
        let (out, log) = run_dong(&i0, &SolverParams::default()).unwrap();
        assert_eq!(out, i0);
        assert_eq!(log.iterations(), 1);
    }
}
