//! Scalar noise distributions and the named measurement-noise scenarios.
//!
//! Every sampler draws from an explicit generator so that Monte Carlo trials
//! are reproducible and independent of scheduling.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub prob: f64,
    pub mean: f64,
    pub variance: f64,
}

impl MixtureComponent {
    pub const fn new(prob: f64, mean: f64, variance: f64) -> Self {
        Self {
            prob,
            mean,
            variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    /// Stable law with characteristic function
    /// `exp{jωk − δ|k|^α [1 + jβ·sign(k)·L(k, α)]}`, where
    /// `L = tan(απ/2)` for `α ≠ 1` and `(2/π)·log|k|` for `α = 1`.
    /// `delta` is the dispersion (scale^α), `omega` the location.
    AlphaStable {
        alpha: f64,
        beta: f64,
        delta: f64,
        omega: f64,
    },
    /// Rayleigh with scale `tau`; nonnegative, mean `τ·√(π/2)`.
    Rayleigh {
        tau: f64,
    },
}

/// Names accepted by [`NoiseSpec::preset`].
pub const SCENARIOS: [&str; 7] = [
    "caseA1",
    "caseA100",
    "caseB1",
    "caseB2",
    "caseC",
    "caseD_stable",
    "caseD_rayleigh",
];

impl NoiseSpec {
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        NoiseSpec::Gaussian { mean, variance }
    }

    /// Measurement-noise scenario by name.
    pub fn preset(name: &str) -> Result<Self> {
        let mixture = |c: &[MixtureComponent]| NoiseSpec::Mixture {
            components: c.to_vec(),
        };
        Ok(match name {
            "caseA1" => Self::gaussian(0.0, 1.0),
            "caseA100" => Self::gaussian(0.0, 100.0),
            "caseB1" => mixture(&[
                MixtureComponent::new(0.99, 0.0, 10.0),
                MixtureComponent::new(0.01, 0.0, 10000.0),
            ]),
            "caseB2" => mixture(&[
                MixtureComponent::new(0.99, -0.1, 10.0),
                MixtureComponent::new(0.01, 0.1, 10000.0),
            ]),
            "caseC" => mixture(&[
                MixtureComponent::new(0.8, 0.0, 1.0),
                MixtureComponent::new(0.1, 1.0, 1000.0),
                MixtureComponent::new(0.1, -1.0, 1000.0),
            ]),
            "caseD_stable" => NoiseSpec::AlphaStable {
                alpha: 1.2,
                beta: 1.0,
                delta: 1.0,
                omega: 0.0,
            },
            "caseD_rayleigh" => NoiseSpec::Rayleigh { tau: 3.0 },
            other => {
                return Err(Error::Config(format!(
                    "unknown noise scenario {other:?}; expected one of {}",
                    SCENARIOS.join(", ")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(msg));
        match self {
            NoiseSpec::Gaussian { mean, variance } => {
                if !mean.is_finite() || !(*variance >= 0.0) || !variance.is_finite() {
                    return bad(format!("invalid gaussian N({mean}, {variance})"));
                }
            }
            NoiseSpec::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture has no components".into());
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.prob > 0.0) || !c.mean.is_finite() || !(c.variance >= 0.0) {
                        return bad(format!("invalid mixture component {c:?}"));
                    }
                    total += c.prob;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("mixture probabilities sum to {total}"));
                }
            }
            NoiseSpec::AlphaStable {
                alpha,
                beta,
                delta,
                omega,
            } => {
                if !(*alpha > 0.0 && *alpha <= 2.0)
                    || !(-1.0..=1.0).contains(beta)
                    || !(*delta >= 0.0)
                    || !omega.is_finite()
                {
                    return bad(format!(
                        "invalid stable parameters ({alpha}, {beta}, {delta}, {omega})"
                    ));
                }
            }
            NoiseSpec::Rayleigh { tau } => {
                if !(*tau > 0.0) || !tau.is_finite() {
                    return bad(format!("rayleigh scale must be positive, got {tau}"));
                }
            }
        }
        Ok(())
    }

    /// One draw. Parameters are assumed valid; see [`NoiseSpec::validate`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, variance } => gaussian(rng, *mean, *variance),
            NoiseSpec::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    acc += c.prob;
                    if u < acc {
                        chosen = *c;
                        break;
                    }
                }
                gaussian(rng, chosen.mean, chosen.variance)
            }
            NoiseSpec::AlphaStable {
                alpha,
                beta,
                delta,
                omega,
            } => stable(rng, *alpha, *beta, *delta, *omega),
            NoiseSpec::Rayleigh { tau } => tau * (-2.0 * unit_open_left(rng).ln()).sqrt(),
        }
    }

    /// Mean of the distribution, where it exists.
    pub fn mean(&self) -> Option<f64> {
        match self {
            NoiseSpec::Gaussian { mean, .. } => Some(*mean),
            NoiseSpec::Mixture { components } => {
                Some(components.iter().map(|c| c.prob * c.mean).sum())
            }
            NoiseSpec::AlphaStable { alpha, omega, .. } => (*alpha > 1.0).then_some(*omega),
            NoiseSpec::Rayleigh { tau } => Some(tau * (PI / 2.0).sqrt()),
        }
    }
}

/// `count` independent draws.
pub fn sample_noise<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..count).map(|_| spec.sample(rng)).collect())
}

/// Characteristic function of [`NoiseSpec::AlphaStable`] at `k`.
pub fn stable_characteristic_function(
    alpha: f64,
    beta: f64,
    delta: f64,
    omega: f64,
    k: f64,
) -> Complex<f64> {
    if k == 0.0 {
        return Complex::new(1.0, 0.0);
    }
    let l = if alpha == 1.0 {
        2.0 / PI * k.abs().ln()
    } else {
        (alpha * PI / 2.0).tan()
    };
    let bracket = Complex::new(1.0, beta * k.signum() * l);
    let exponent = Complex::new(0.0, omega * k) - bracket * (delta * k.abs().powf(alpha));
    exponent.exp()
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + variance.sqrt() * z
}

/// Uniform on (0, 1].
fn unit_open_left<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Chambers–Mallows–Stuck draw.
///
/// The construction below produces the usual `S(α, b, σ, μ)` law with
/// characteristic function `exp{−σ^α|k|^α(1 − j·b·sign(k)·tan(απ/2)) + jμk}`
/// (and the logarithmic form at `α = 1`). Matching the `[1 + jβ…]` bracket of
/// [`stable_characteristic_function`] therefore needs `b = −β` when `α ≠ 1`
/// and `b = β` when `α = 1`, with `σ = δ^(1/α)`.
fn stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64, delta: f64, omega: f64) -> f64 {
    if delta == 0.0 {
        return omega;
    }
    let sigma = delta.powf(1.0 / alpha);
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break PI * (u - 0.5);
        }
    };
    let w = -unit_open_left(rng).ln();
    if alpha == 1.0 {
        let b = beta;
        let lead = FRAC_PI_2 + b * v;
        let x = 2.0 / PI * (lead * v.tan() - b * (FRAC_PI_2 * w * v.cos() / lead).ln());
        sigma * x + 2.0 / PI * b * sigma * sigma.ln() + omega
    } else {
        let t = -beta * (alpha * PI / 2.0).tan();
        let shift = t.atan() / alpha;
        let scale = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        let arg = alpha * (v + shift);
        let x = scale * arg.sin() / v.cos().powf(1.0 / alpha)
            * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha);
        sigma * x + omega
    }
}
