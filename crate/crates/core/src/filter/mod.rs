//! Sigma-point filters for graph signals.
//!
//! One pipeline covers the whole comparison family. Switches in
//! [`FilterConfig`] pick the variant:
//!
//! | variant            | graph basis | square root | loss          |
//! |--------------------|-------------|-------------|---------------|
//! | `ukf`              | identity    | no          | unit          |
//! | `gsp-ukf`          | Laplacian   | no          | unit          |
//! | `gsp-srukf`        | Laplacian   | yes         | unit          |
//! | `gsp-huber-srukf`  | Laplacian   | yes         | Huber         |
//! | `gsp-cauchy-srukf` | Laplacian   | yes         | Cauchy        |
//! | `gsp-gr-srukf`     | Laplacian   | yes         | general robust|
//!
//! Each step predicts with the unscented transform, moves to graph-frequency
//! coordinates, solves the stacked robust regression by IRLS and maps the
//! posterior back to the vertex domain.

mod propagate;
mod update;
pub mod ut;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::graph::GftBasis;
use crate::loss::{LossSpec, WeightMatrix};
use crate::model::StateSpaceModel;
use crate::sqrt::{psd_sqrt, qr_sqrt, SqrtFactor};

pub use propagate::{measurement_stats, predict, MeasurementStats, Prediction};
pub use update::{
    build_augmented_system, irls_update, normal_equations_solution, posterior_full_update,
    posterior_sqrt_update, weighted_gain, AugmentedSystem, GainMode, GainSolution, IrlsOutcome,
};
pub use ut::{sigma_points, UtParams, UtWeights};

/// Covariance carried between steps: a square-root factor or the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Sqrt(SqrtFactor),
    Full(DMatrix<f64>),
}

impl Covariance {
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Covariance::Sqrt(s) => s.reconstruct(),
            Covariance::Full(p) => p.clone(),
        }
    }

    /// A lower-triangular square root.
    pub fn sqrt(&self) -> Result<SqrtFactor> {
        match self {
            Covariance::Sqrt(s) => Ok(s.clone()),
            Covariance::Full(p) => psd_sqrt(p),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Covariance::Sqrt(s) => s.n(),
            Covariance::Full(p) => p.nrows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub x_hat: DVector<f64>,
    pub cov: Covariance,
    /// Index of the last processed measurement; 0 before the first step.
    pub step: usize,
}

impl FilterState {
    /// Initial state in the representation `config` asks for.
    pub fn new(x_hat: DVector<f64>, p0: &DMatrix<f64>, config: &FilterConfig) -> Result<Self> {
        check_shape(p0.nrows() == x_hat.len() && p0.is_square(), || {
            format!(
                "covariance {}x{} vs state length {}",
                p0.nrows(),
                p0.ncols(),
                x_hat.len()
            )
        })?;
        let cov = if config.use_sqrt {
            Covariance::Sqrt(psd_sqrt(p0)?)
        } else {
            Covariance::Full(p0.clone())
        };
        Ok(Self {
            x_hat,
            cov,
            step: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub use_graph: bool,
    pub use_sqrt: bool,
    pub loss: LossSpec,
    pub gain_mode: GainMode,
    /// Relative-change stopping threshold `ξ` of the IRLS loop.
    pub irls_threshold: f64,
    pub irls_max_iters: usize,
    pub ut: UtParams,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            use_graph: true,
            use_sqrt: true,
            loss: LossSpec::default(),
            gain_mode: GainMode::Full,
            irls_threshold: 1e-6,
            irls_max_iters: 50,
            ut: UtParams::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.irls_threshold > 0.0) {
            return Err(Error::Config(format!(
                "irls_threshold must be positive, got {}",
                self.irls_threshold
            )));
        }
        if self.irls_max_iters == 0 {
            return Err(Error::Config("irls_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Loss parameters shared by the robust presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossParams {
    pub gr_beta: f64,
    pub gr_gamma: f64,
    pub huber_sigma: f64,
    pub cauchy_sigma: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            gr_beta: -1.0,
            gr_gamma: 1.1,
            huber_sigma: 1.1,
            cauchy_sigma: 1.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FilterVariant {
    Ukf,
    GspUkf,
    GspSrukf,
    GspHuberSrukf,
    GspCauchySrukf,
    GspGrSrukf,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 6] = [
        FilterVariant::Ukf,
        FilterVariant::GspUkf,
        FilterVariant::GspSrukf,
        FilterVariant::GspHuberSrukf,
        FilterVariant::GspCauchySrukf,
        FilterVariant::GspGrSrukf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterVariant::Ukf => "ukf",
            FilterVariant::GspUkf => "gsp-ukf",
            FilterVariant::GspSrukf => "gsp-srukf",
            FilterVariant::GspHuberSrukf => "gsp-huber-srukf",
            FilterVariant::GspCauchySrukf => "gsp-cauchy-srukf",
            FilterVariant::GspGrSrukf => "gsp-gr-srukf",
        }
    }

    pub fn is_robust(self) -> bool {
        matches!(
            self,
            FilterVariant::GspHuberSrukf
                | FilterVariant::GspCauchySrukf
                | FilterVariant::GspGrSrukf
        )
    }

    /// Preset configuration; `base` supplies the IRLS, gain and UT settings.
    pub fn config(self, base: &FilterConfig, losses: &LossParams) -> FilterConfig {
        let (use_graph, use_sqrt, loss) = match self {
            FilterVariant::Ukf => (false, false, LossSpec::Unit),
            FilterVariant::GspUkf => (true, false, LossSpec::Unit),
            FilterVariant::GspSrukf => (true, true, LossSpec::Unit),
            FilterVariant::GspHuberSrukf => (
                true,
                true,
                LossSpec::Huber {
                    sigma: losses.huber_sigma,
                },
            ),
            FilterVariant::GspCauchySrukf => (
                true,
                true,
                LossSpec::Cauchy {
                    sigma: losses.cauchy_sigma,
                },
            ),
            FilterVariant::GspGrSrukf => (
                true,
                true,
                LossSpec::GeneralRobust {
                    beta: losses.gr_beta,
                    gamma: losses.gr_gamma,
                },
            ),
        };
        FilterConfig {
            use_graph,
            use_sqrt,
            loss,
            ..*base
        }
    }
}

impl fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = FilterVariant::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!(
                    "unknown filter {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for FilterVariant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FilterVariant> for String {
    fn from(v: FilterVariant) -> Self {
        v.name().to_string()
    }
}

/// Diagnostics of one filter step, in graph-frequency coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub x_pred: DVector<f64>,
    pub gain_v: DMatrix<f64>,
    pub h_v: DMatrix<f64>,
    pub weights: WeightMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// The prior factor had to be rebuilt after a failed rank-1 downdate.
    pub refactored: bool,
}

/// A configured filter bound to a model and a graph basis.
pub struct SigmaPointFilter<'m> {
    model: &'m dyn StateSpaceModel,
    basis: GftBasis,
    config: FilterConfig,
    weights: UtWeights,
    q_sqrt: DMatrix<f64>,
    r_sqrt: DMatrix<f64>,
    r_sqrt_v: DMatrix<f64>,
}

impl<'m> SigmaPointFilter<'m> {
    /// With `use_graph = false` the supplied basis is ignored and the
    /// identity is used instead.
    pub fn new(
        model: &'m dyn StateSpaceModel,
        basis: &GftBasis,
        config: FilterConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = model.dim();
        let basis = if config.use_graph {
            check_shape(basis.n() == n, || {
                format!("basis size {} vs state dimension {n}", basis.n())
            })?;
            basis.clone()
        } else {
            GftBasis::identity(n)
        };
        let weights = UtWeights::new(&config.ut, n)?;
        let q_sqrt = psd_sqrt(model.process_cov())?.into_matrix();
        let r_sqrt = psd_sqrt(model.measurement_cov())?.into_matrix();
        let r_sqrt_v = qr_sqrt(&basis.v().tr_mul(&r_sqrt))?.into_matrix();
        Ok(Self {
            model,
            basis,
            config,
            weights,
            q_sqrt,
            r_sqrt,
            r_sqrt_v,
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn basis(&self) -> &GftBasis {
        &self.basis
    }

    /// Processes the measurement of step `state.step + 1`.
    pub fn step(
        &self,
        state: &FilterState,
        y_obs: &DVector<f64>,
    ) -> Result<(FilterState, StepReport)> {
        let n = self.weights.n;
        check_shape(state.x_hat.len() == n && state.cov.n() == n, || {
            format!(
                "state of length {} vs model dimension {n}",
                state.x_hat.len()
            )
        })?;
        let step = state.step + 1;
        let prediction = predict(
            &state.x_hat,
            &state.cov,
            self.model,
            step,
            &self.weights,
            &self.q_sqrt,
        )?;
        let stats = measurement_stats(
            &prediction,
            self.model,
            &self.weights,
            &self.basis,
            &self.r_sqrt,
        )?;
        let aug = build_augmented_system(&prediction, y_obs, &stats, &self.basis, &self.r_sqrt_v)?;
        let outcome = irls_update(
            &aug,
            &self.config.loss,
            self.config.gain_mode,
            self.config.irls_threshold,
            self.config.irls_max_iters,
        )?;

        let v = self.basis.v();
        let x_hat = v * &outcome.x_post_v;
        let cov = match &prediction.cov_pred {
            Covariance::Sqrt(_) => {
                let post_v =
                    posterior_sqrt_update(&aug.psi, &outcome.gain, &aug.h_v, &outcome.r_bar)?;
                Covariance::Sqrt(qr_sqrt(&(v * post_v.matrix()))?)
            }
            Covariance::Full(p) => {
                let p_v = v.tr_mul(p) * v;
                let post_v = posterior_full_update(&p_v, &outcome.gain, &aug.h_v, &outcome.r_bar);
                let post = v * post_v * v.transpose();
                Covariance::Full((&post + post.transpose()) * 0.5)
            }
        };
        if x_hat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite posterior estimate".into()));
        }
        let report = StepReport {
            x_pred: prediction.x_pred,
            gain_v: outcome.gain,
            h_v: aug.h_v,
            weights: outcome.weights,
            iterations: outcome.iterations,
            converged: outcome.converged,
            refactored: prediction.refactored,
        };
        Ok((FilterState { x_hat, cov, step }, report))
    }

    /// Runs over every row of `measurements`, returning the estimates row-wise.
    pub fn run(&self, initial: &FilterState, measurements: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut state = initial.clone();
        let mut out = DMatrix::zeros(measurements.nrows(), measurements.ncols());
        for i in 0..measurements.nrows() {
            let y = measurements.row(i).transpose();
            state = self.step(&state, &y)?.0;
            out.set_row(i, &state.x_hat.transpose());
        }
        Ok(out)
    }
}

/// Single step without keeping a filter around.
pub fn step(
    state: &FilterState,
    y_obs: &DVector<f64>,
    model: &dyn StateSpaceModel,
    basis: &GftBasis,
    config: &FilterConfig,
) -> Result<FilterState> {
    SigmaPointFilter::new(model, basis, *config)?
        .step(state, y_obs)
        .map(|(s, _)| s)
}
