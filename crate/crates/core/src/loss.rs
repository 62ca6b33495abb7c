//! Robust losses and their iteratively-reweighted-least-squares weights.
//!
//! The general family is
//!
//! ```text
//! φ(c) = |β−2|/β · (((c/γ)²/|β−2| + 1)^(β/2) − 1)
//! ```
//!
//! with analytic limits at `β = 2` (quadratic), `β = 0` (log / Cauchy-like)
//! and `β → −∞` (Welsch). The IRLS weight `φ′(c)/c` is normalised by its value
//! at `c = 0`, so every loss gives weight 1 to a zero residual and the `Unit`
//! loss gives weight 1 everywhere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape values at or below this are evaluated with the Welsch limit.
pub const WELSCH_BETA_CUTOFF: f64 = -1e6;

/// Smallest weight handed to the filter; keeps `Ξ⁻¹` finite.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    GeneralRobust {
        beta: f64,
        gamma: f64,
    },
    Huber {
        sigma: f64,
    },
    Cauchy {
        sigma: f64,
    },
    /// Plain least squares; turns every robust filter into its non-robust base.
    Unit,
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, scale) = match *self {
            LossSpec::GeneralRobust { beta, gamma } => {
                if beta.is_nan() {
                    return Err(Error::Config("general robust beta is NaN".into()));
                }
                ("gamma", gamma)
            }
            LossSpec::Huber { sigma } | LossSpec::Cauchy { sigma } => ("sigma", sigma),
            LossSpec::Unit => return Ok(()),
        };
        if scale > 0.0 && scale.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{name} must be positive, got {scale}"
            )))
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, LossSpec::Unit)
    }

    /// `φ(c)`.
    pub fn value(&self, c: f64) -> Result<f64> {
        if !c.is_finite() {
            return Err(Error::Input(format!("non-finite residual {c}")));
        }
        Ok(match *self {
            LossSpec::Unit => 0.5 * c * c,
            LossSpec::Huber { sigma } => {
                if c.abs() < sigma {
                    0.5 * c * c
                } else {
                    sigma * c.abs() - 0.5 * sigma * sigma
                }
            }
            LossSpec::Cauchy { sigma } => 0.5 * sigma * sigma * (c * c / sigma).ln_1p(),
            LossSpec::GeneralRobust { beta, gamma } => {
                let x2 = (c / gamma).powi(2);
                if beta == 2.0 {
                    0.5 * x2
                } else if beta == 0.0 {
                    (0.5 * x2).ln_1p()
                } else if beta <= WELSCH_BETA_CUTOFF {
                    -(-0.5 * x2).exp_m1()
                } else {
                    let b = (beta - 2.0).abs();
                    b / beta * (0.5 * beta * (x2 / b).ln_1p()).exp_m1()
                }
            }
        })
    }

    /// Raw IRLS weight `φ′(c)/c` at `c = 0` (the limit `φ″(0)`).
    pub fn raw_weight_at_zero(&self) -> f64 {
        match *self {
            LossSpec::Unit | LossSpec::Huber { .. } => 1.0,
            LossSpec::Cauchy { sigma } => sigma,
            LossSpec::GeneralRobust { gamma, .. } => gamma.powi(-2),
        }
    }

    /// Normalised weight `ρ(c) = (φ′(c)/c) / φ″(0)`, so `ρ(0) = 1`.
    pub fn weight(&self, c: f64) -> f64 {
        match *self {
            LossSpec::Unit => 1.0,
            LossSpec::Huber { sigma } => {
                if c.abs() <= sigma {
                    1.0
                } else {
                    sigma / c.abs()
                }
            }
            LossSpec::Cauchy { sigma } => 1.0 / (1.0 + c * c / sigma),
            LossSpec::GeneralRobust { beta, gamma } => {
                let x2 = (c / gamma).powi(2);
                if beta == 2.0 {
                    1.0
                } else if beta == 0.0 {
                    1.0 / (1.0 + 0.5 * x2)
                } else if beta <= WELSCH_BETA_CUTOFF {
                    (-0.5 * x2).exp()
                } else {
                    let b = (beta - 2.0).abs();
                    ((0.5 * beta - 1.0) * (x2 / b).ln_1p()).exp()
                }
            }
        }
    }
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::GeneralRobust {
            beta: -1.0,
            gamma: 1.1,
        }
    }
}

/// Diagonal IRLS weights for the stacked residual: the state block `Ξ_x`
/// followed by the measurement block `Ξ_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub xi_x: DVector<f64>,
    pub xi_y: DVector<f64>,
}

impl WeightMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            xi_x: DVector::from_element(n, 1.0),
            xi_y: DVector::from_element(n, 1.0),
        }
    }

    /// Full `2n×2n` block-diagonal matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.xi_x.len();
        let mut d = DVector::zeros(2 * n);
        d.rows_mut(0, n).copy_from(&self.xi_x);
        d.rows_mut(n, n).copy_from(&self.xi_y);
        DMatrix::from_diagonal(&d)
    }
}

/// Weights for a `2n` residual vector, split into state and measurement halves.
pub fn build_weight_matrix(spec: &LossSpec, e: &DVector<f64>) -> Result<WeightMatrix> {
    if !e.len().is_multiple_of(2) || e.is_empty() {
        return Err(Error::Shape(format!(
            "residual length {} is not 2n",
            e.len()
        )));
    }
    if let Some(bad) = e.iter().find(|c| !c.is_finite()) {
        return Err(Error::Input(format!("non-finite residual {bad}")));
    }
    let n = e.len() / 2;
    let w = |c: f64| spec.weight(c).max(WEIGHT_FLOOR);
    Ok(WeightMatrix {
        xi_x: e.rows(0, n).map(w),
        xi_y: e.rows(n, n).map(w),
    })
}
