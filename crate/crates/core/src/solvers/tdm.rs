use crate::error::Result;
use crate::image::ImageGrid;

use super::flux::{conservative_divergence, nested_divergence};
use super::proposed::telegraph_advance;
use super::{run_loop, FluxScheme, Monitor, RunLog, SolverParams};

/// Edge-stopping diffusivity `1 / (1 + s² / k²)`.
#[inline]
pub fn diffusivity(s: f64, k: f64) -> f64 {
    1.0 / (1.0 + (s * s) / (k * k))
}

/// Telegraph-diffusion baseline: `I_tt + gamma I_t = div(c(|grad I|) grad I)`
/// with Neumann borders and no fidelity term.
pub fn run_tdm(i0: &ImageGrid, p: &SolverParams) -> Result<(ImageGrid, RunLog)> {
    run_tdm_monitored(i0, p, None)
}

pub(super) fn run_tdm_monitored(
    i0: &ImageGrid,
    p: &SolverParams,
    monitor: Option<Monitor<'_>>,
) -> Result<(ImageGrid, RunLog)> {
    let k = p.k_edge * i0.max_level();
    run_loop(i0, p, monitor, |state| {
        let drive = match p.flux {
            FluxScheme::Conservative => {
                conservative_divergence(&state.curr, |f| diffusivity(f.magnitude_sq().sqrt(), k) * f.normal)
            }
            FluxScheme::NestedCentral => nested_divergence(&state.curr, |_, gx, gy| {
                let c = diffusivity(gx.hypot(gy), k);
                (c * gx, c * gy)
            }),
        };
        telegraph_advance(state, &drive, i0, 0.0, p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::StopReason;

    #[test]
    fn half_at_contrast() {
        assert_eq!(diffusivity(3.0, 3.0), 0.5);
        assert_eq!(diffusivity(0.0, 3.0), 1.0);
    }

    #[test]
    fn constant_input_unchanged() {
        let i0 = ImageGrid::filled(9, 7, 120.0, 255.0).unwrap();
        let (out, log) = run_tdm(&i0, &SolverParams::default()).unwrap();
        assert_eq!(out, i0);
        assert_eq!(log.iterations(), 1);
        assert_eq!(log.stop_reason, StopReason::Threshold);
    }

    #[test]
    fn lambda_is_ignored() {
        let i0 = ImageGrid::from_fn(12, 12, 255.0, |x, y| ((x * 31 + y * 17) % 97) as f64 + 10.0).unwrap();
        let p0 = SolverParams {
            max_iter: 10,
            eps_stop: 1e-30,
            lambda_fid: 0.0,
            ..Default::default()
        };
        let p1 = SolverParams {
            lambda_fid: 5.0,
            ..p0.clone()
        };
        assert_eq!(run_tdm(&i0, &p0).unwrap().0, run_tdm(&i0, &p1).unwrap().0);
    }
}
