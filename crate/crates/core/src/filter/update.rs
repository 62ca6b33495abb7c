//! Measurement update in the graph-frequency domain.
//!
//! The prior and the measurement are stacked into one whitened regression
//!
//! ```text
//! d = Γ·x + e,   d = Υ⁻¹·[x_pred; z],   Γ = Υ⁻¹·[I; H],   Υ = blkdiag(Ψ, Φ)
//! ```
//!
//! where `Ψ·Ψᵀ = P_pred` and `Φ·Φᵀ = R`, both in spectral coordinates. The
//! robust estimate minimises `Σ φ(e_k)` by iteratively reweighted least
//! squares; each pass inflates the prior and measurement covariances by the
//! inverse weights and applies the Kalman gain form of the weighted normal
//! equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::propagate::{MeasurementStats, Prediction};
use super::Covariance;
use crate::error::{check_shape, Error, Result};
use crate::graph::GftBasis;
use crate::loss::{build_weight_matrix, LossSpec, WeightMatrix};
use crate::sqrt::{psd_sqrt, qr_sqrt, SqrtFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// `K = P̄·Hᵀ·(H·P̄·Hᵀ + R̄)⁻¹`.
    #[default]
    Full,
    /// Graph-frequency diagonal gain `diag(P̄·Hᵀ)·diag((H·P̄·Hᵀ + R̄)⁻¹)`.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    /// `Υ⁻¹·[x_pred; z]`, length `2n`.
    pub d: DVector<f64>,
    /// `Υ⁻¹·[I; H]`, `2n×n`.
    pub gamma: DMatrix<f64>,
    /// Factor of the spectral prior covariance.
    pub psi: SqrtFactor,
    /// Factor of the spectral measurement covariance.
    pub phi: SqrtFactor,
    pub h_v: DMatrix<f64>,
    pub x_pred_v: DVector<f64>,
    pub y_obs_v: DVector<f64>,
    pub y_pred_v: DVector<f64>,
}

impl AugmentedSystem {
    pub fn n(&self) -> usize {
        self.x_pred_v.len()
    }

    /// `e = d − Γ·x`.
    pub fn residual(&self, x_v: &DVector<f64>) -> DVector<f64> {
        &self.d - &self.gamma * x_v
    }

    /// Innovation `y^v − y^v_pred`.
    pub fn innovation(&self) -> DVector<f64> {
        &self.y_obs_v - &self.y_pred_v
    }
}

/// Builds the whitened stacked regression from the prior and the measurement
/// moments. `r_sqrt_v` is any square root of `R^v = Vᵀ·R·V`.
///
/// The pseudo-measurement is the statistically linearised
/// `z = y^v − y^v_pred + H·x^v_pred` with `H = (P^v⁻¹·P^v_xy)ᵀ`.
pub fn build_augmented_system(
    prediction: &Prediction,
    y_obs: &DVector<f64>,
    stats: &MeasurementStats,
    basis: &GftBasis,
    r_sqrt_v: &DMatrix<f64>,
) -> Result<AugmentedSystem> {
    let n = prediction.x_pred.len();
    check_shape(y_obs.len() == n, || {
        format!("measurement length {} vs state {n}", y_obs.len())
    })?;
    if y_obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite measurement".into()));
    }
    let v = basis.v();
    let psi = match &prediction.cov_pred {
        Covariance::Sqrt(s) => qr_sqrt(&v.tr_mul(s.matrix()))?,
        Covariance::Full(p) => SqrtFactor::cholesky(&(v.tr_mul(p) * v))?,
    };
    let phi = match &prediction.cov_pred {
        Covariance::Sqrt(_) => qr_sqrt(r_sqrt_v)?,
        Covariance::Full(_) => SqrtFactor::cholesky(&(r_sqrt_v * r_sqrt_v.transpose()))?,
    };
    if (0..n).any(|i| psi.matrix()[(i, i)] <= 0.0) {
        return Err(Error::Numerical("prior covariance is singular".into()));
    }
    if (0..n).any(|i| phi.matrix()[(i, i)] <= 0.0) {
        return Err(Error::Numerical(
            "measurement covariance is singular".into(),
        ));
    }

    let x_pred_v = basis.forward(&prediction.x_pred);
    let y_obs_v = basis.forward(y_obs);

    // P⁻¹·P_xy = Ψ⁻ᵀ·Ψ⁻¹·P_xy
    let half = psi.solve_lower(&stats.p_xy_v)?;
    let solved = psi
        .matrix()
        .tr_solve_lower_triangular(&half)
        .ok_or_else(|| Error::Numerical("prior covariance is singular".into()))?;
    let h_v = solved.transpose();
    let z = &y_obs_v - &stats.y_pred_v + &h_v * &x_pred_v;

    let mut d = DVector::zeros(2 * n);
    d.rows_mut(0, n).copy_from(&psi.solve_lower_vec(&x_pred_v)?);
    d.rows_mut(n, n).copy_from(&phi.solve_lower_vec(&z)?);
    let mut gamma = DMatrix::zeros(2 * n, n);
    gamma
        .rows_mut(0, n)
        .copy_from(&psi.solve_lower(&DMatrix::identity(n, n))?);
    gamma.rows_mut(n, n).copy_from(&phi.solve_lower(&h_v)?);

    Ok(AugmentedSystem {
        d,
        gamma,
        psi,
        phi,
        h_v,
        x_pred_v,
        y_obs_v,
        y_pred_v: stats.y_pred_v.clone(),
    })
}

/// One weighted solve in gain form.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSolution {
    pub x_v: DVector<f64>,
    pub gain: DMatrix<f64>,
    /// `Ψ·Ξ_x⁻¹·Ψᵀ`.
    pub p_bar: DMatrix<f64>,
    /// `Φ·Ξ_y⁻¹·Φᵀ`.
    pub r_bar: DMatrix<f64>,
}

/// Gain-form solution for fixed weights:
/// `x = x_pred + K·(y − y_pred)` with `K` from the reweighted covariances.
pub fn weighted_gain(
    aug: &AugmentedSystem,
    weights: &WeightMatrix,
    mode: GainMode,
) -> Result<GainSolution> {
    let n = aug.n();
    check_shape(weights.xi_x.len() == n && weights.xi_y.len() == n, || {
        format!(
            "weights of length {}/{} vs n = {n}",
            weights.xi_x.len(),
            weights.xi_y.len()
        )
    })?;
    let p_bar = inflate(aug.psi.matrix(), &weights.xi_x);
    let r_bar = inflate(aug.phi.matrix(), &weights.xi_y);
    let h = &aug.h_v;
    let ph_t = &p_bar * h.transpose();
    let innov_cov = h * &ph_t + &r_bar;
    let innov_cov = (&innov_cov + innov_cov.transpose()) * 0.5;
    let chol = innov_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    let gain = match mode {
        // K = P̄Hᵀ·S⁻¹ = (S⁻¹·H·P̄)ᵀ since S and P̄ are symmetric.
        GainMode::Full => chol.solve(&ph_t.transpose()).transpose(),
        GainMode::Diagonal => {
            let s_inv = chol.inverse();
            DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| ph_t[(k, k)] * s_inv[(k, k)]))
        }
    };
    let x_v = &aug.x_pred_v + &gain * aug.innovation();
    Ok(GainSolution {
        x_v,
        gain,
        p_bar,
        r_bar,
    })
}

/// `L·diag(1/w)·Lᵀ`.
fn inflate(l: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = l.clone();
    for (j, wj) in w.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / wj.sqrt());
    }
    &scaled * scaled.transpose()
}

/// `(Γᵀ·Ξ·Γ)⁻¹·Γᵀ·Ξ·d`, the weighted least-squares solution of the stacked regression.
pub fn normal_equations_solution(
    aug: &AugmentedSystem,
    weights: &WeightMatrix,
) -> Result<DVector<f64>> {
    let xi = weights.to_matrix();
    let gt_xi = aug.gamma.transpose() * xi;
    let lhs = &gt_xi * &aug.gamma;
    let rhs = &gt_xi * &aug.d;
    lhs.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Numerical("normal equations are singular".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsOutcome {
    pub x_post_v: DVector<f64>,
    pub gain: DMatrix<f64>,
    pub r_bar: DMatrix<f64>,
    pub weights: WeightMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Iteratively reweighted update starting from `x⁰ = x_pred`. Stops when
/// `‖x^{j+1} − x^j‖ / ‖x^j‖ ≤ threshold` or after `max_iters` solves. A
/// [`LossSpec::Unit`] loss has constant weights and stops after one solve.
pub fn irls_update(
    aug: &AugmentedSystem,
    loss: &LossSpec,
    mode: GainMode,
    threshold: f64,
    max_iters: usize,
) -> Result<IrlsOutcome> {
    if !(threshold > 0.0) || max_iters == 0 {
        return Err(Error::Config(format!(
            "IRLS needs threshold > 0 and max_iters >= 1, got {threshold} / {max_iters}"
        )));
    }
    let mut x = aug.x_pred_v.clone();
    let mut iterations = 0;
    loop {
        let weights = build_weight_matrix(loss, &aug.residual(&x))?;
        let sol = weighted_gain(aug, &weights, mode)?;
        iterations += 1;
        let change = (&sol.x_v - &x).norm() / x.norm().max(f64::MIN_POSITIVE);
        let converged = loss.is_unit() || change <= threshold;
        if converged || iterations >= max_iters {
            return Ok(IrlsOutcome {
                x_post_v: sol.x_v,
                gain: sol.gain,
                r_bar: sol.r_bar,
                weights,
                iterations,
                converged,
            });
        }
        x = sol.x_v;
    }
}

/// Posterior factor `qr([(I − K·H)·Ψ, K·√R̄])`, i.e. the Joseph form
/// `(I−KH)·P·(I−KH)ᵀ + K·R̄·Kᵀ`, which is valid for any gain.
pub fn posterior_sqrt_update(
    psi: &SqrtFactor,
    gain: &DMatrix<f64>,
    h_v: &DMatrix<f64>,
    r_bar: &DMatrix<f64>,
) -> Result<SqrtFactor> {
    let n = psi.n();
    let i_kh = DMatrix::identity(n, n) - gain * h_v;
    let r_root = psd_sqrt(r_bar)?;
    let mut block = DMatrix::zeros(n, 2 * n);
    block.columns_mut(0, n).copy_from(&(&i_kh * psi.matrix()));
    block.columns_mut(n, n).copy_from(&(gain * r_root.matrix()));
    qr_sqrt(&block)
}

/// Full-matrix Joseph form.
pub fn posterior_full_update(
    p_v: &DMatrix<f64>,
    gain: &DMatrix<f64>,
    h_v: &DMatrix<f64>,
    r_bar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = p_v.nrows();
    let i_kh = DMatrix::identity(n, n) - gain * h_v;
    let p = &i_kh * p_v * i_kh.transpose() + gain * r_bar * gain.transpose();
    (&p + p.transpose()) * 0.5
}
