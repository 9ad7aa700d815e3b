use crate::error::Result;
use crate::fuzzy::{EdgeDetector, EdgeIndicatorField, TemplateSet};
use crate::image::{central_gradient, check_dims, convolve, default_radius, gaussian_kernel, ImageGrid};

use super::flux::{weighted_divergence, weighted_tv_divergence};
use super::{
    check_positive_input, finish_step, iterate_floor, run_loop, Mode, Monitor, RunLog, SolverParams, SolverState,
    ThetaSchedule,
};

/// Damped second-order update
/// `(1 + g t) I+ = (2 + g t) I - I- + t² (drive - m lambda (1 - I0 / I))`,
/// written as an increment on `I` so a stationary state is reproduced exactly.
pub(super) fn telegraph_advance(
    state: &SolverState,
    drive: &[f64],
    i0: &ImageGrid,
    lambda: f64,
    p: &SolverParams,
) -> Result<SolverState> {
    let m = i0.max_level();
    let tau2 = p.tau * p.tau;
    let damp = 1.0 + p.gamma * p.tau;
    let curr = state.curr.data();
    let prev = state.prev.data();
    let obs = i0.data();
    let next: Vec<f64> = (0..curr.len())
        .map(|i| {
            let fidelity = if lambda > 0.0 {
                m * lambda * (1.0 - obs[i] / curr[i])
            } else {
                0.0
            };
            curr[i] + ((curr[i] - prev[i]) + tau2 * (drive[i] - fidelity)) / damp
        })
        .collect();
    finish_step(state, next, iterate_floor(i0, lambda))
}

/// One step of the direct-mode telegraph TV scheme with a given edge indicator.
pub fn telegraph_step(
    state: &SolverState,
    theta: &EdgeIndicatorField,
    i0: &ImageGrid,
    p: &SolverParams,
) -> Result<SolverState> {
    p.validate()?;
    state.curr.check_shape(i0)?;
    state.curr.check_shape(&state.prev)?;
    check_dims((theta.width, theta.height), (i0.width(), i0.height()))?;
    let m = i0.max_level();
    let drive: Vec<f64> = weighted_tv_divergence(&state.curr, theta.values(), p.eps_tv * m, p.flux)?
        .into_iter()
        .map(|d| m * d)
        .collect();
    telegraph_advance(state, &drive, i0, p.lambda_at(state.iteration), p)
}

/// Fuzzy-edge telegraph TV despeckling of `i0`.
pub fn run_proposed(i0: &ImageGrid, p: &SolverParams, templates: &TemplateSet) -> Result<(ImageGrid, RunLog)> {
    run_proposed_monitored(i0, p, templates, None)
}

pub fn run_proposed_monitored(
    i0: &ImageGrid,
    p: &SolverParams,
    templates: &TemplateSet,
    monitor: Option<Monitor<'_>>,
) -> Result<(ImageGrid, RunLog)> {
    p.validate()?;
    check_positive_input(i0, p.lambda_fid)?;
    let detector = EdgeDetector::new(templates.clone(), p.delta)?.with_hesitation(p.hesitation)?;
    let m = i0.max_level();
    match p.mode {
        Mode::Direct => {
            let frozen = (p.theta_schedule == ThetaSchedule::Frozen).then(|| detector.indicator(i0));
            run_loop(i0, p, monitor, |state| {
                let per_step;
                let theta = match &frozen {
                    Some(t) => t,
                    None => {
                        per_step = detector.indicator(&state.curr);
                        &per_step
                    }
                };
                let drive: Vec<f64> = weighted_tv_divergence(&state.curr, theta.values(), p.eps_tv * m, p.flux)?
                    .into_iter()
                    .map(|d| m * d)
                    .collect();
                telegraph_advance(state, &drive, i0, p.lambda_at(state.iteration), p)
            })
        }
        Mode::Regularized => {
            let kernel = gaussian_kernel(p.xi, default_radius(p.xi))?;
            let frozen =
                (p.theta_schedule == ThetaSchedule::Frozen).then(|| detector.indicator(&convolve(i0, &kernel)));
            run_loop(i0, p, monitor, |state| {
                let smoothed = convolve(&state.curr, &kernel);
                let coeff = regularized_coefficient(&smoothed, &detector, frozen.as_ref())?;
                let drive = weighted_divergence(&state.curr, &coeff, p.flux)?;
                telegraph_advance(state, &drive, i0, p.lambda_at(state.iteration), p)
            })
        }
    }
}

/// `theta(I_xi) / (1 + |grad I_xi| / max_level)` per pixel, where `I_xi` is the
/// Gaussian-smoothed iterate.
pub(crate) fn regularized_coefficient(
    smoothed: &ImageGrid,
    detector: &EdgeDetector,
    frozen: Option<&EdgeIndicatorField>,
) -> Result<Vec<f64>> {
    let per_step;
    let theta = match frozen {
        Some(t) => t,
        None => {
            per_step = detector.indicator(smoothed);
            &per_step
        }
    };
    let m = smoothed.max_level();
    let grad = central_gradient(smoothed, 1.0)?;
    Ok(theta
        .values()
        .iter()
        .zip(grad.magnitude())
        .map(|(t, g)| t / (1.0 + g / m))
        .collect())
}
