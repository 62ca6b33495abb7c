//! Time update and predicted measurement statistics.

use nalgebra::{DMatrix, DVector};

use super::ut::{sigma_points, UtWeights};
use super::Covariance;
use crate::error::{Error, Result};
use crate::graph::GftBasis;
use crate::model::StateSpaceModel;
use crate::sqrt::{psd_sqrt, qr_sqrt, SqrtFactor, UpdateSign};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x_pred: DVector<f64>,
    pub cov_pred: Covariance,
    /// Set when the rank-1 downdate failed and the factor was rebuilt from
    /// the full covariance.
    pub refactored: bool,
}

/// Predicted measurement moments, expressed in the graph-frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStats {
    pub y_pred: DVector<f64>,
    pub y_pred_v: DVector<f64>,
    pub p_xy_v: DMatrix<f64>,
    /// Innovation covariance `P_yy^v`, as a factor when propagating square roots.
    pub p_yy_v: Covariance,
}

/// Propagates the posterior through `f` at `step`.
///
/// `q_sqrt` is any square root of `Q`. In square-root mode the prior factor is
/// the QR compound of the weighted sigma deviations and `q_sqrt`, followed by
/// a rank-1 correction for the central point.
pub fn predict(
    x_hat: &DVector<f64>,
    cov: &Covariance,
    model: &dyn StateSpaceModel,
    step: usize,
    weights: &UtWeights,
    q_sqrt: &DMatrix<f64>,
) -> Result<Prediction> {
    let sigma = cov.sqrt()?;
    let pts = sigma_points(x_hat, &sigma, weights)?;
    let mut prop = DMatrix::zeros(weights.n, pts.ncols());
    for s in 0..pts.ncols() {
        prop.set_column(s, &model.transition(&pts.column(s).into_owned(), step));
    }
    check_finite(&prop, "propagated sigma points")?;
    let x_pred = weights.mean(&prop);
    let (cov_pred, refactored) = match cov {
        Covariance::Sqrt(_) => {
            let (s, fallback) = sqrt_moment(&prop, &x_pred, weights, q_sqrt)?;
            (Covariance::Sqrt(s), fallback)
        }
        Covariance::Full(_) => (
            Covariance::Full(full_moment(&prop, &x_pred, weights, q_sqrt)),
            false,
        ),
    };
    Ok(Prediction {
        x_pred,
        cov_pred,
        refactored,
    })
}

/// Regenerates sigma points around the prior, pushes them through `h` and
/// forms the graph-frequency-domain measurement moments.
pub fn measurement_stats(
    prediction: &Prediction,
    model: &dyn StateSpaceModel,
    weights: &UtWeights,
    basis: &GftBasis,
    r_sqrt: &DMatrix<f64>,
) -> Result<MeasurementStats> {
    let sigma = prediction.cov_pred.sqrt()?;
    let pts = sigma_points(&prediction.x_pred, &sigma, weights)?;
    let mut ys = DMatrix::zeros(weights.n, pts.ncols());
    for s in 0..pts.ncols() {
        ys.set_column(s, &model.measure(&pts.column(s).into_owned()));
    }
    check_finite(&ys, "measured sigma points")?;
    let y_pred = weights.mean(&ys);
    let v = basis.v();

    let mut dx = pts.clone();
    let mut dy = ys.clone();
    for s in 0..pts.ncols() {
        let mut cx = dx.column_mut(s);
        cx -= &prediction.x_pred;
        let mut cy = dy.column_mut(s);
        cy -= &y_pred;
    }
    let dx_v = v.tr_mul(&dx);
    let dy_v = v.tr_mul(&dy);
    let mut p_xy_v = DMatrix::zeros(weights.n, weights.n);
    for s in 0..pts.ncols() {
        p_xy_v += dx_v.column(s) * dy_v.column(s).transpose() * weights.wc[s];
    }

    let r_sqrt_v = v.tr_mul(r_sqrt);
    let p_yy_v = match prediction.cov_pred {
        Covariance::Sqrt(_) => {
            // Deviations are already centred, so pass the spectral block with a zero mean.
            let (s, _) = sqrt_moment(&dy_v, &DVector::zeros(weights.n), weights, &r_sqrt_v)?;
            Covariance::Sqrt(s)
        }
        Covariance::Full(_) => Covariance::Full(full_moment(
            &dy_v,
            &DVector::zeros(weights.n),
            weights,
            &r_sqrt_v,
        )),
    };
    Ok(MeasurementStats {
        y_pred_v: v.tr_mul(&y_pred),
        y_pred,
        p_xy_v,
        p_yy_v,
    })
}

/// Square-root form of `Σ ω_c^s (p_s − m)(p_s − m)ᵀ + N·Nᵀ`.
fn sqrt_moment(
    points: &DMatrix<f64>,
    mean: &DVector<f64>,
    weights: &UtWeights,
    noise_sqrt: &DMatrix<f64>,
) -> Result<(SqrtFactor, bool)> {
    let n = weights.n;
    let m = points.ncols();
    let mut block = DMatrix::zeros(n, (m - 1) + noise_sqrt.ncols());
    for s in 1..m {
        block.set_column(s - 1, &((points.column(s) - mean) * weights.wc[s].sqrt()));
    }
    block
        .columns_mut(m - 1, noise_sqrt.ncols())
        .copy_from(noise_sqrt);
    let factor = qr_sqrt(&block)?;

    let w0 = weights.wc[0];
    if w0 == 0.0 {
        return Ok((factor, false));
    }
    let dev0 = points.column(0) - mean;
    let sign = if w0 > 0.0 {
        UpdateSign::Update
    } else {
        UpdateSign::Downdate
    };
    match factor.rank1_update(&dev0, w0.abs(), sign) {
        Ok(s) => Ok((s, false)),
        Err(Error::DowndateFailure) => {
            let full = full_moment(points, mean, weights, noise_sqrt);
            let s = psd_sqrt(&full).map_err(|e| {
                Error::Numerical(format!(
                    "covariance is not positive semidefinite after downdate failure: {e}"
                ))
            })?;
            Ok((s, true))
        }
        Err(e) => Err(e),
    }
}

fn full_moment(
    points: &DMatrix<f64>,
    mean: &DVector<f64>,
    weights: &UtWeights,
    noise_sqrt: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut p = noise_sqrt * noise_sqrt.transpose();
    for s in 0..points.ncols() {
        let d = points.column(s) - mean;
        p += &d * d.transpose() * weights.wc[s];
    }
    (&p + p.transpose()) * 0.5
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite {what}")))
    }
}
