//! Linearised estimation-error dynamics and their steady state.
//!
//! With a converged gain the spectral estimation error obeys
//! `ξ_i = A·ξ_{i−1} + (I−KH)·q^v − K·r^v`, with
//! `A = (I−KH)·F^v`. Its covariance follows `δ_i = A·δ_{i−1}·Aᵀ + B`,
//! `B = (I−KH)·Q^v·(I−KH)ᵀ + K·R^v·Kᵀ`, and converges to the solution of the
//! discrete Lyapunov equation `δ = A·δ·Aᵀ + B` whenever `A` is stable.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_shape, Error, Result};
use crate::graph::GftBasis;
use crate::model::StateSpaceModel;

const POWER_ITERATION_TOL: f64 = 1e-13;
const DENSE_EIGEN_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamics {
    pub a_mat: DMatrix<f64>,
    pub b_mat: DMatrix<f64>,
}

pub fn error_dynamics(
    f_jacobian_v: &DMatrix<f64>,
    h_v: &DMatrix<f64>,
    gain: &DMatrix<f64>,
    q_v: &DMatrix<f64>,
    r_v: &DMatrix<f64>,
) -> Result<ErrorDynamics> {
    let n = f_jacobian_v.nrows();
    for (name, m) in [
        ("F", f_jacobian_v),
        ("H", h_v),
        ("K", gain),
        ("Q", q_v),
        ("R", r_v),
    ] {
        check_shape(m.nrows() == n && m.ncols() == n, || {
            format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())
        })?;
    }
    let i_kh = DMatrix::identity(n, n) - gain * h_v;
    let a_mat = &i_kh * f_jacobian_v;
    let b = &i_kh * q_v * i_kh.transpose() + gain * r_v * gain.transpose();
    Ok(ErrorDynamics {
        a_mat,
        b_mat: (&b + b.transpose()) * 0.5,
    })
}

/// Error dynamics of a filter snapshot: `F^v = Vᵀ·(∂f/∂x)·V` at `x_lin`.
pub fn error_dynamics_at(
    model: &dyn StateSpaceModel,
    basis: &GftBasis,
    x_lin: &DVector<f64>,
    step: usize,
    h_v: &DMatrix<f64>,
    gain_v: &DMatrix<f64>,
) -> Result<ErrorDynamics> {
    let v = basis.v();
    let f_v = v.tr_mul(&model.transition_jacobian(x_lin, step)) * v;
    let q_v = v.tr_mul(model.process_cov()) * v;
    let r_v = v.tr_mul(model.measurement_cov()) * v;
    error_dynamics(&f_v, h_v, gain_v, &q_v, &r_v)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= DENSE_EIGEN_LIMIT {
        return a
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    power_iteration(a)
}

/// Gelfand's formula `ρ = lim ‖A^k‖^{1/k}` evaluated at `k = 2^m` by
/// repeated squaring, keeping the scale in log form.
fn power_iteration(a: &DMatrix<f64>) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut b = a / norm;
    let mut log_scale = norm.ln();
    let mut prev = norm;
    for m in 1..=60 {
        let sq = &b * &b;
        let nrm = sq.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        b = sq / nrm;
        log_scale = 2.0 * log_scale + nrm.ln();
        let est = (log_scale / 2f64.powi(m)).exp();
        if (est - prev).abs() <= POWER_ITERATION_TOL * est {
            return est;
        }
        prev = est;
    }
    prev
}

/// Solves `δ = A·δ·Aᵀ + B` through `vec(δ) = (I − A⊗A)⁻¹·vec(B)`
/// (column stacking, so `vec(A·δ·Aᵀ) = (A⊗A)·vec(δ)`).
pub fn solve_lyapunov(dynamics: &ErrorDynamics) -> Result<DMatrix<f64>> {
    let a = &dynamics.a_mat;
    let n = a.nrows();
    check_shape(
        a.is_square() && dynamics.b_mat.nrows() == n && dynamics.b_mat.ncols() == n,
        || "A and B must be square and of equal size".to_string(),
    )?;
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::UnstableDynamics(rho));
    }
    let system = DMatrix::identity(n * n, n * n) - a.kronecker(a);
    let rhs = DVector::from_column_slice(dynamics.b_mat.as_slice());
    let vec_delta = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov system is singular".into()))?;
    let delta = DMatrix::from_column_slice(n, n, vec_delta.as_slice());
    Ok((&delta + delta.transpose()) * 0.5)
}

/// Fixed-point iteration `δ_{k+1} = A·δ_k·Aᵀ + B` from `δ_0 = B`.
pub fn lyapunov_fixed_point(
    dynamics: &ErrorDynamics,
    tol: f64,
    max_iters: usize,
) -> Result<DMatrix<f64>> {
    let a = &dynamics.a_mat;
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::UnstableDynamics(rho));
    }
    let mut delta = dynamics.b_mat.clone();
    for _ in 0..max_iters {
        let next = a * &delta * a.transpose() + &dynamics.b_mat;
        let change = (&next - &delta).amax();
        delta = next;
        if change <= tol * (1.0 + delta.amax()) {
            return Ok(delta);
        }
    }
    Err(Error::Numerical(format!(
        "fixed point did not converge in {max_iters} iterations"
    )))
}

/// `‖δ − A·δ·Aᵀ − B‖_max`.
pub fn lyapunov_residual(dynamics: &ErrorDynamics, delta: &DMatrix<f64>) -> f64 {
    (delta - &dynamics.a_mat * delta * dynamics.a_mat.transpose() - &dynamics.b_mat).amax()
}
