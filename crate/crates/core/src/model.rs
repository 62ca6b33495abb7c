//! State-space models `x_i = f(x_{i−1}, i) + q_i`, `y_i = h(x_i) + r_i`,
//! the nonlinear benchmark system and trajectory simulation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_shape, Error, Result};
use crate::noise::NoiseSpec;

/// Guard for the `φ/(x + x²)` pole of the benchmark measurement.
pub const POLE_GUARD: f64 = 1e-6;

const FD_STEP: f64 = 1e-6;

pub trait StateSpaceModel: Sync {
    fn dim(&self) -> usize;

    /// `f(x_{i−1}, i)`: maps the state at step `i − 1` to step `i`.
    fn transition(&self, x: &DVector<f64>, step: usize) -> DVector<f64>;

    fn measure(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Process-noise covariance `Q`.
    fn process_cov(&self) -> &DMatrix<f64>;

    /// Nominal measurement-noise covariance `R` assumed by the filters.
    fn measurement_cov(&self) -> &DMatrix<f64>;

    /// `∂f/∂x` at `x`. Central differences unless overridden.
    fn transition_jacobian(&self, x: &DVector<f64>, step: usize) -> DMatrix<f64> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            let col =
                (self.transition(&plus, step) - self.transition(&minus, step)) / (2.0 * FD_STEP);
            jac.set_column(j, &col);
        }
        jac
    }
}

/// `x/2 + 25x/(1+x²) + 8·cos(1.2·(i−1))`, elementwise.
pub fn benchmark_f(x: &DVector<f64>, step: usize) -> DVector<f64> {
    let drive = 8.0 * (1.2 * (step as f64 - 1.0)).cos();
    x.map(|v| 0.5 * v + 25.0 * v / (1.0 + v * v) + drive)
}

/// `x + φ·sin(x) + φ/g(x)` with `g(x) = x + x²` and `|g| ≥ 1e-6`, elementwise.
pub fn benchmark_h(x: &DVector<f64>, phi: f64) -> DVector<f64> {
    x.map(|v| {
        let g = v + v * v;
        let g = if g.abs() < POLE_GUARD {
            if g < 0.0 {
                -POLE_GUARD
            } else {
                POLE_GUARD
            }
        } else {
            g
        };
        v + phi * v.sin() + phi / g
    })
}

/// Elementwise derivative of the deterministic part of [`benchmark_f`].
pub fn benchmark_f_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&x.map(|v| {
        let d = 1.0 + v * v;
        0.5 + 25.0 * (1.0 - v * v) / (d * d)
    }))
}

/// The benchmark system applied independently at every vertex.
#[derive(Debug, Clone)]
pub struct BenchmarkModel {
    n: usize,
    phi: f64,
    q_cov: DMatrix<f64>,
    r_cov: DMatrix<f64>,
}

impl BenchmarkModel {
    /// `Q = q_var·I`, nominal `R = r_var·I`.
    pub fn new(n: usize, phi: f64, q_var: f64, r_var: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if !(q_var >= 0.0) || !(r_var > 0.0) || !phi.is_finite() {
            return Err(Error::Config(format!(
                "invalid model parameters phi={phi} q={q_var} r={r_var}"
            )));
        }
        Ok(Self {
            n,
            phi,
            q_cov: DMatrix::identity(n, n) * q_var,
            r_cov: DMatrix::identity(n, n) * r_var,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

impl StateSpaceModel for BenchmarkModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn transition(&self, x: &DVector<f64>, step: usize) -> DVector<f64> {
        benchmark_f(x, step)
    }

    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        benchmark_h(x, self.phi)
    }

    fn process_cov(&self) -> &DMatrix<f64> {
        &self.q_cov
    }

    fn measurement_cov(&self) -> &DMatrix<f64> {
        &self.r_cov
    }

    fn transition_jacobian(&self, x: &DVector<f64>, _step: usize) -> DMatrix<f64> {
        benchmark_f_jacobian(x)
    }
}

/// `x_i = A·x_{i−1} + q_i`, `y_i = C·x_i + r_i`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub q_cov: DMatrix<f64>,
    pub r_cov: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        q_cov: DMatrix<f64>,
        r_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        for (name, m) in [("A", &a), ("C", &c), ("Q", &q_cov), ("R", &r_cov)] {
            check_shape(m.nrows() == n && m.ncols() == n, || {
                format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())
            })?;
        }
        Ok(Self { a, c, q_cov, r_cov })
    }
}

impl StateSpaceModel for LinearModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn transition(&self, x: &DVector<f64>, _step: usize) -> DVector<f64> {
        &self.a * x
    }

    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    fn process_cov(&self) -> &DMatrix<f64> {
        &self.q_cov
    }

    fn measurement_cov(&self) -> &DMatrix<f64> {
        &self.r_cov
    }

    fn transition_jacobian(&self, _x: &DVector<f64>, _step: usize) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// Ground truth and observations; row `i − 1` holds step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: DMatrix<f64>,
    pub measurements: DMatrix<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, row: usize) -> DVector<f64> {
        self.states.row(row).transpose()
    }

    pub fn measurement(&self, row: usize) -> DVector<f64> {
        self.measurements.row(row).transpose()
    }
}

/// Initial true state `x_{0,k} = 0.5·k`, `k = 1..n`.
pub fn benchmark_initial_state(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| 0.5 * (k + 1) as f64)
}

pub fn simulate_trajectory(
    model: &dyn StateSpaceModel,
    process_noise: &NoiseSpec,
    meas_noise: &NoiseSpec,
    x0: &DVector<f64>,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traj = simulate_trajectory_with(model, process_noise, meas_noise, x0, steps, &mut rng)?;
    traj.seed = seed;
    Ok(traj)
}

/// Same as [`simulate_trajectory`] but draws from a caller-supplied generator.
/// Noise is independent across vertices and steps.
pub fn simulate_trajectory_with<R: Rng + ?Sized>(
    model: &dyn StateSpaceModel,
    process_noise: &NoiseSpec,
    meas_noise: &NoiseSpec,
    x0: &DVector<f64>,
    steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let n = model.dim();
    check_shape(x0.len() == n, || {
        format!("initial state length {} vs dimension {n}", x0.len())
    })?;
    if steps == 0 {
        return Err(Error::Input("trajectory needs at least one step".into()));
    }
    process_noise.validate()?;
    meas_noise.validate()?;

    let mut states = DMatrix::zeros(steps, n);
    let mut measurements = DMatrix::zeros(steps, n);
    let mut x = x0.clone();
    for i in 1..=steps {
        x = model.transition(&x, i) + DVector::from_fn(n, |_, _| process_noise.sample(rng));
        let y = model.measure(&x) + DVector::from_fn(n, |_, _| meas_noise.sample(rng));
        states.set_row(i - 1, &x.transpose());
        measurements.set_row(i - 1, &y.transpose());
    }
    Ok(Trajectory {
        states,
        measurements,
        seed: 0,
    })
}
