//! Explicit time steppers: the fuzzy-edge telegraph TV flow and the two
//! baselines (telegraph diffusion, convex TV with a gray-level indicator).
//!
//! Intensities stay in the image's own gray-level units. The TV and fidelity
//! forces are dimensionless, so they are multiplied by `max_level`; this makes
//! every run equivalent to evolving `I / max_level` and keeps the parameters
//! (`eps_tv`, `k_edge`, `k_gray`) independent of the source bit depth.

mod dong;
mod flux;
mod proposed;
mod tdm;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub use dong::{gray_level_indicator, run_dong};
pub use flux::{tv_divergence, weighted_divergence, weighted_tv_divergence, FluxScheme};
pub use proposed::{run_proposed, run_proposed_monitored, telegraph_step};
pub use tdm::{diffusivity, run_tdm};

/// Positivity guard as a fraction of `max_level`.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `theta(I) grad I / |grad I|_eps` flux.
    #[default]
    Direct,
    /// `theta(G * I) / (1 + |grad G * I|) grad I` flux.
    Regularized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaSchedule {
    /// Recompute the edge indicator from the current iterate every step.
    #[default]
    PerStep,
    /// Compute it once from the observed image.
    Frozen,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "regularized" => Ok(Mode::Regularized),
            other => Err(Error::param("mode", format!("unknown mode `{other}`"))),
        }
    }
}

impl std::str::FromStr for ThetaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-step" => Ok(ThetaSchedule::PerStep),
            "frozen" => Ok(ThetaSchedule::Frozen),
            other => Err(Error::param("theta", format!("unknown schedule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Filter {
    Proposed,
    Tdm,
    Dong,
}

impl Filter {
    pub const ALL: [Filter; 3] = [Filter::Proposed, Filter::Tdm, Filter::Dong];

    pub fn name(self) -> &'static str {
        match self {
            Filter::Proposed => "proposed",
            Filter::Tdm => "tdm",
            Filter::Dong => "dong",
        }
    }
}

impl std::fmt::Display for Filter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Filter::Proposed),
            "tdm" => Ok(Filter::Tdm),
            "dong" => Ok(Filter::Dong),
            other => Err(Error::param("filter", format!("unknown filter `{other}`"))),
        }
    }
}

/// Time-stepping parameters. `eps_tv` and `k_edge` are fractions of
/// `max_level`; `k_gray` multiplies the squared normalised intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub tau: f64,
    pub gamma: f64,
    pub lambda_fid: f64,
    /// Linear decay of the fidelity weight per iteration (0 keeps it constant).
    pub lambda_decay: f64,
    pub eps_tv: f64,
    pub eps_stop: f64,
    pub max_iter: usize,
    pub mode: Mode,
    pub xi: f64,
    /// Contrast of the telegraph-diffusion baseline.
    pub k_edge: f64,
    /// Gray-level indicator constant of the convex TV baseline.
    pub k_gray: f64,
    pub theta_schedule: ThetaSchedule,
    pub delta: f64,
    /// Sugeno generator parameter; `None` uses plain memberships.
    pub hesitation: Option<f64>,
    pub flux: FluxScheme,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tau: 0.1,
            gamma: 1.0,
            lambda_fid: 1.0,
            lambda_decay: 0.0,
            eps_tv: 0.02,
            eps_stop: 1e-4,
            max_iter: 2000,
            mode: Mode::Direct,
            xi: 1.0,
            k_edge: 2.0,
            k_gray: 100.0,
            theta_schedule: ThetaSchedule::PerStep,
            delta: crate::fuzzy::DEFAULT_DELTA,
            hesitation: None,
            flux: FluxScheme::Conservative,
        }
    }
}

impl SolverParams {
    /// Defaults tuned per filter; only the TV regulariser differs.
    pub fn for_filter(filter: Filter) -> Self {
        match filter {
            Filter::Proposed | Filter::Tdm => Self::default(),
            Filter::Dong => Self {
                eps_tv: 0.5,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be nonnegative, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        nonneg("gamma", self.gamma)?;
        nonneg("lambda", self.lambda_fid)?;
        nonneg("lambda_decay", self.lambda_decay)?;
        positive("eps_tv", self.eps_tv)?;
        positive("eps_stop", self.eps_stop)?;
        positive("xi", self.xi)?;
        positive("k_edge", self.k_edge)?;
        positive("k_gray", self.k_gray)?;
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(l) = self.hesitation {
            if !(l.is_finite() && l > -1.0) {
                return Err(Error::param("hesitation", format!("must exceed -1, got {l}")));
            }
        }
        Ok(())
    }

    /// Fidelity weight at iteration `n`.
    pub fn lambda_at(&self, n: usize) -> f64 {
        self.lambda_fid * (1.0 - self.lambda_decay * n as f64).max(0.0)
    }
}

/// Two most recent iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub curr: ImageGrid,
    pub prev: ImageGrid,
    pub iteration: usize,
    pub last_rel_change: f64,
}

impl SolverState {
    /// `I^1 = I^0 = I0`: zero initial velocity.
    pub fn initial(i0: &ImageGrid) -> Self {
        Self {
            curr: i0.clone(),
            prev: i0.clone(),
            iteration: 0,
            last_rel_change: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Threshold,
    MaxIter,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Threshold => "threshold",
            StopReason::MaxIter => "max-iter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub rel_change: f64,
    pub metric: Option<f64>,
}

/// Per-iteration history of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl RunLog {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last_rel_change(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_change)
    }

    /// `iteration,rel_change` lines, plus a `metric` column when any record has one.
    pub fn to_csv(&self) -> String {
        let with_metric = self.records.iter().any(|r| r.metric.is_some());
        let mut out = String::from(if with_metric {
            "iteration,rel_change,metric\n"
        } else {
            "iteration,rel_change\n"
        });
        for r in &self.records {
            let _ = write!(out, "{},{:e}", r.iteration, r.rel_change);
            if with_metric {
                match r.metric {
                    Some(m) => {
                        let _ = write!(out, ",{m:e}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Optional per-iteration observer; its return value lands in the log.
pub type Monitor<'a> = &'a mut dyn FnMut(usize, &ImageGrid) -> Option<f64>;

/// `||new - old||² / ||old||²`.
pub fn relative_change(new: &ImageGrid, old: &ImageGrid) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in new.data().iter().zip(old.data()) {
        num += (a - b) * (a - b);
        den += b * b;
    }
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Runs `filter` with its parameter set.
pub fn run_filter(
    filter: Filter,
    i0: &ImageGrid,
    p: &SolverParams,
    templates: &crate::fuzzy::TemplateSet,
    monitor: Option<Monitor<'_>>,
) -> Result<(ImageGrid, RunLog)> {
    match filter {
        Filter::Proposed => run_proposed_monitored(i0, p, templates, monitor),
        Filter::Tdm => tdm::run_tdm_monitored(i0, p, monitor),
        Filter::Dong => dong::run_dong_monitored(i0, p, monitor),
    }
}

fn check_positive_input(i0: &ImageGrid, lambda: f64) -> Result<()> {
    if lambda > 0.0 && i0.min_value() <= 0.0 {
        return Err(Error::DegenerateInput(
            "observed image must be strictly positive when the fidelity weight is positive".into(),
        ));
    }
    Ok(())
}

/// Builds the next iterate from raw values, applying the floor and the
/// finiteness check.
fn finish_step(state: &SolverState, mut next: Vec<f64>, floor: f64) -> Result<SolverState> {
    let w = state.curr.width();
    for (i, v) in next.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NumericalBlowup {
                iteration: state.iteration + 1,
                x: i % w,
                y: i / w,
                value: *v,
            });
        }
        *v = v.max(floor);
    }
    let curr = ImageGrid::from_parts(w, state.curr.height(), next, state.curr.max_level());
    let rel = relative_change(&curr, &state.curr);
    Ok(SolverState {
        prev: state.curr.clone(),
        curr,
        iteration: state.iteration + 1,
        last_rel_change: rel,
    })
}

/// Floor applied to iterates: `eta` when the fidelity term is active, else 0.
fn iterate_floor(i0: &ImageGrid, lambda: f64) -> f64 {
    if lambda > 0.0 {
        POSITIVITY_FLOOR * i0.max_level()
    } else {
        0.0
    }
}

/// Shared driver: steps until the relative change drops to `eps_stop` or
/// `max_iter` steps were taken.
fn run_loop<S>(
    i0: &ImageGrid,
    p: &SolverParams,
    mut monitor: Option<Monitor<'_>>,
    mut step: S,
) -> Result<(ImageGrid, RunLog)>
where
    S: FnMut(&SolverState) -> Result<SolverState>,
{
    p.validate()?;
    let mut state = SolverState::initial(i0);
    let mut records = Vec::new();
    let stop_reason = loop {
        state = step(&state)?;
        let metric = monitor.as_mut().and_then(|m| m(state.iteration, &state.curr));
        records.push(IterationRecord {
            iteration: state.iteration,
            rel_change: state.last_rel_change,
            metric,
        });
        if state.last_rel_change <= p.eps_stop {
            break StopReason::Threshold;
        }
        if state.iteration >= p.max_iter {
            break StopReason::MaxIter;
        }
    };
    Ok((state.curr, RunLog { records, stop_reason }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        for bad in [
            SolverParams {
                tau: 0.0,
                ..Default::default()
            },
            SolverParams {
                eps_stop: 0.0,
                ..Default::default()
            },
            SolverParams {
                eps_stop: -1.0,
                ..Default::default()
            },
            SolverParams {
                eps_tv: 0.0,
                ..Default::default()
            },
            SolverParams {
                max_iter: 0,
                ..Default::default()
            },
            SolverParams {
                gamma: -1.0,
                ..Default::default()
            },
            SolverParams {
                delta: 1.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn lambda_schedule() {
        let p = SolverParams {
            lambda_fid: 2.0,
            lambda_decay: 0.1,
            ..Default::default()
        };
        assert_eq!(p.lambda_at(0), 2.0);
        assert!((p.lambda_at(5) - 1.0).abs() < 1e-12);
        assert_eq!(p.lambda_at(20), 0.0);
        assert_eq!(SolverParams::default().lambda_at(1000), 1.0);
    }

    #[test]
    fn relative_change_edge_cases() {
        let z = ImageGrid::filled(2, 2, 0.0, 1.0).unwrap();
        let one = ImageGrid::filled(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(relative_change(&z, &z), 0.0);
        assert_eq!(relative_change(&one, &z), f64::INFINITY);
        let two = ImageGrid::filled(2, 2, 2.0, 1.0).unwrap();
        assert_eq!(relative_change(&two, &one), 1.0);
    }

    #[test]
    fn filter_names_roundtrip() {
        for f in Filter::ALL {
            assert_eq!(f.name().parse::<Filter>().unwrap(), f);
        }
        assert!("median".parse::<Filter>().is_err());
    }

    #[test]
    fn csv_log_format() {
        let log = RunLog {
            records: vec![
                IterationRecord {
                    iteration: 1,
                    rel_change: 0.5,
                    metric: None,
                },
                IterationRecord {
                    iteration: 2,
                    rel_change: 0.0,
                    metric: Some(20.0),
                },
            ],
            stop_reason: StopReason::Threshold,
        };
        assert_eq!(log.to_csv(), "iteration,rel_change,metric\n1,5e-1,\n2,0e0,2e1\n");
    }
}
