use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::sqrt::SqrtFactor;

/// Unscented-transform scaling: spread `alpha`, prior `beta`, secondary `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UtParams {
    /// `η = α²(n + κ) − n`.
    pub fn eta(&self, n: usize) -> f64 {
        let n = n as f64;
        self.alpha * self.alpha * (n + self.kappa) - n
    }
}

/// Sigma-point weights for a fixed state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct UtWeights {
    pub n: usize,
    pub eta: f64,
    /// Mean weights `ω_m`, length `2n + 1`.
    pub wm: Vec<f64>,
    /// Covariance weights `ω_c`, length `2n + 1`.
    pub wc: Vec<f64>,
}

impl UtWeights {
    pub fn new(params: &UtParams, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        let eta = params.eta(n);
        let spread = n as f64 + eta;
        if !(spread > 0.0) || !spread.is_finite() {
            return Err(Error::Config(format!(
                "n + eta must be positive, got {spread}"
            )));
        }
        let w = 1.0 / (2.0 * spread);
        let mut wm = vec![w; 2 * n + 1];
        let mut wc = vec![w; 2 * n + 1];
        wm[0] = eta / spread;
        wc[0] = eta / spread + (1.0 - params.alpha * params.alpha + params.beta);
        Ok(Self { n, eta, wm, wc })
    }

    /// `√(n + η)`.
    pub fn spread(&self) -> f64 {
        (self.n as f64 + self.eta).sqrt()
    }

    pub fn len(&self) -> usize {
        self.wm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wm.is_empty()
    }

    /// `Σ ω_m^s·points_s`.
    pub fn mean(&self, points: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(points.nrows());
        for (s, w) in self.wm.iter().enumerate() {
            out.axpy(*w, &points.column(s), 1.0);
        }
        out
    }
}

/// `2n + 1` symmetric sigma points, one per column: the mean, then
/// `x̂ ± √(n+η)·S_s` for each column `S_s` of the factor.
pub fn sigma_points(
    x_hat: &DVector<f64>,
    sigma: &SqrtFactor,
    weights: &UtWeights,
) -> Result<DMatrix<f64>> {
    let n = weights.n;
    check_shape(x_hat.len() == n && sigma.n() == n, || {
        format!(
            "state length {} / factor size {} vs n = {n}",
            x_hat.len(),
            sigma.n()
        )
    })?;
    let spread = weights.spread();
    let mut pts = DMatrix::zeros(n, 2 * n + 1);
    pts.set_column(0, x_hat);
    for s in 0..n {
        let offset = sigma.matrix().column(s) * spread;
        pts.set_column(1 + s, &(x_hat + &offset));
        pts.set_column(1 + n + s, &(x_hat - &offset));
    }
    Ok(pts)
}
