use std::path::PathBuf;

use clap::Args;
use despeckle::solvers::{FluxScheme, Mode, ThetaSchedule};
use despeckle::SolverParams;
use serde::Deserialize;

/// Partial solver settings. Used for plan-file tables and for command-line
/// flags; unset fields leave the underlying value alone.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub tau: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_decay: Option<f64>,
    pub eps_tv: Option<f64>,
    pub eps_stop: Option<f64>,
    pub max_iter: Option<usize>,
    pub mode: Option<Mode>,
    pub theta: Option<ThetaSchedule>,
    pub xi: Option<f64>,
    pub k_edge: Option<f64>,
    pub k_gray: Option<f64>,
    pub delta: Option<f64>,
    pub hesitation: Option<f64>,
    pub flux: Option<FluxScheme>,
}

impl ParamOverrides {
    pub fn apply(&self, p: &mut SolverParams) {
        macro_rules! set {
            ($($src:ident => $dst:ident),* $(,)?) => {
                $(if let Some(v) = self.$src { p.$dst = v; })*
            };
        }
        set!(
            tau => tau, gamma => gamma, lambda => lambda_fid, lambda_decay => lambda_decay,
            eps_tv => eps_tv, eps_stop => eps_stop, max_iter => max_iter, mode => mode,
            theta => theta_schedule, xi => xi, k_edge => k_edge, k_gray => k_gray,
            delta => delta, flux => flux,
        );
        if self.hesitation.is_some() {
            p.hesitation = self.hesitation;
        }
    }
}

/// Solver flags shared by `despeckle` and `batch`.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Time step
    #[arg(long)]
    pub tau: Option<f64>,
    /// Damping coefficient of the telegraph term
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fidelity weight (ignored by tdm)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Linear per-iteration decay of the fidelity weight
    #[arg(long)]
    pub lambda_decay: Option<f64>,
    /// Relative-change stopping threshold
    #[arg(long)]
    pub eps_stop: Option<f64>,
    /// TV regularisation, as a fraction of the gray-level ceiling
    #[arg(long)]
    pub eps_tv: Option<f64>,
    /// Floor of the edge indicator
    #[arg(long)]
    pub delta: Option<f64>,
    /// direct | regularized
    #[arg(long)]
    pub mode: Option<Mode>,
    /// per-step | frozen
    #[arg(long)]
    pub theta: Option<ThetaSchedule>,
    /// conservative | nested-central
    #[arg(long)]
    pub flux: Option<FluxScheme>,
    /// Gaussian scale of the regularized mode and the gray-level indicator
    #[arg(long)]
    pub xi: Option<f64>,
    /// Contrast of the tdm baseline, as a fraction of the ceiling
    #[arg(long)]
    pub k_edge: Option<f64>,
    /// Gray-level indicator constant of the dong baseline
    #[arg(long)]
    pub k_gray: Option<f64>,
    /// Sugeno generator parameter for intuitionistic memberships
    #[arg(long)]
    pub hesitation: Option<f64>,
    /// Iteration budget
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Edge template file (label line plus three rows of three values per template)
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

impl SolverArgs {
    pub fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            tau: self.tau,
            gamma: self.gamma,
            lambda: self.lambda,
            lambda_decay: self.lambda_decay,
            eps_tv: self.eps_tv,
            eps_stop: self.eps_stop,
            max_iter: self.max_iter,
            mode: self.mode,
            theta: self.theta,
            xi: self.xi,
            k_edge: self.k_edge,
            k_gray: self.k_gray,
            delta: self.delta,
            hesitation: self.hesitation,
            flux: self.flux,
        }
    }
}
