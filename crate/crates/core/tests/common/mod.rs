#![allow(dead_code)]

use gsp_srukf::bench::trial_seed;
use gsp_srukf::filter::{FilterConfig, FilterState, FilterVariant, LossParams, SigmaPointFilter};
use gsp_srukf::graph::{generate_topology, GftBasis, TopologyModel};
use gsp_srukf::model::{
    benchmark_initial_state, simulate_trajectory, BenchmarkModel, LinearModel, Trajectory,
};
use gsp_srukf::noise::NoiseSpec;
use nalgebra::{DMatrix, DVector};

/// Plain textbook UKF (Julier/Wan–van der Merwe, α = 1, β = 2, κ = 0) on a
/// linear model, written without any of the library's filter code.
pub struct OracleUkf {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl OracleUkf {
    fn points(x: &DVector<f64>, p: &DMatrix<f64>) -> (Vec<DVector<f64>>, Vec<f64>, Vec<f64>) {
        let n = x.len();
        let (alpha, beta, kappa) = (1.0, 2.0, 0.0);
        let lambda = alpha * alpha * (n as f64 + kappa) - n as f64;
        let l = p
            .clone()
            .cholesky()
            .expect("oracle covariance must be PD")
            .l();
        let scale = (n as f64 + lambda).sqrt();
        let mut pts = vec![x.clone()];
        for j in 0..n {
            pts.push(x + l.column(j) * scale);
        }
        for j in 0..n {
            pts.push(x - l.column(j) * scale);
        }
        let w = 1.0 / (2.0 * (n as f64 + lambda));
        let mut wm = vec![w; 2 * n + 1];
        let mut wc = wm.clone();
        wm[0] = lambda / (n as f64 + lambda);
        wc[0] = wm[0] + 1.0 - alpha * alpha + beta;
        (pts, wm, wc)
    }

    pub fn step(
        &self,
        x: &DVector<f64>,
        p: &DMatrix<f64>,
        y: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let (pts, wm, wc) = Self::points(x, p);
        let fx: Vec<_> = pts.iter().map(|s| &self.a * s).collect();
        let mut xp = DVector::zeros(n);
        for (s, w) in fx.iter().zip(&wm) {
            xp += s * *w;
        }
        let mut pp = self.q.clone();
        for (s, w) in fx.iter().zip(&wc) {
            pp += (s - &xp) * (s - &xp).transpose() * *w;
        }

        let (pts, wm, wc) = Self::points(&xp, &pp);
        let hy: Vec<_> = pts.iter().map(|s| &self.c * s).collect();
        let mut yp = DVector::zeros(y.len());
        for (s, w) in hy.iter().zip(&wm) {
            yp += s * *w;
        }
        let mut pyy = self.r.clone();
        let mut pxy = DMatrix::zeros(n, y.len());
        for k in 0..pts.len() {
            pyy += (&hy[k] - &yp) * (&hy[k] - &yp).transpose() * wc[k];
            pxy += (&pts[k] - &xp) * (&hy[k] - &yp).transpose() * wc[k];
        }
        let k = &pxy * pyy.clone().try_inverse().unwrap();
        let x_new = &xp + &k * (y - &yp);
        let p_new = &pp - &k * &pyy * k.transpose();
        (x_new, p_new)
    }
}

pub fn two_state_linear() -> LinearModel {
    LinearModel::new(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.8]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[0.2, 0.05, 0.05, 0.1]),
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3]),
    )
    .unwrap()
}

/// A stable coupled linear system on the vertices of a small graph.
pub fn graph_linear(n: usize, q: f64, r: f64) -> LinearModel {
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 0.7,
        1 => 0.1,
        _ => 0.0,
    });
    LinearModel::new(
        a,
        DMatrix::identity(n, n),
        DMatrix::identity(n, n) * q,
        DMatrix::identity(n, n) * r,
    )
    .unwrap()
}

pub fn basis(n: usize, seed: u64) -> GftBasis {
    GftBasis::from_topology(&generate_topology(n, TopologyModel::default(), seed).unwrap()).unwrap()
}

pub fn preset(variant: FilterVariant) -> FilterConfig {
    variant.config(&FilterConfig::default(), &LossParams::default())
}

/// Benchmark trajectory with `n` vertices under a named measurement scenario.
pub fn benchmark_trajectory(
    n: usize,
    scenario: &str,
    steps: usize,
    seed: u64,
) -> (BenchmarkModel, Trajectory) {
    let model = BenchmarkModel::new(n, 1.0, 0.01, 10.0).unwrap();
    let traj = simulate_trajectory(
        &model,
        &NoiseSpec::gaussian(0.0, 0.01),
        &NoiseSpec::preset(scenario).unwrap(),
        &benchmark_initial_state(n),
        steps,
        trial_seed(seed, 0),
    )
    .unwrap();
    (model, traj)
}

pub fn run_filter(
    model: &dyn gsp_srukf::model::StateSpaceModel,
    basis: &GftBasis,
    config: FilterConfig,
    x0: &DVector<f64>,
    p0: &DMatrix<f64>,
    measurements: &DMatrix<f64>,
) -> Vec<FilterState> {
    let filter = SigmaPointFilter::new(model, basis, config).unwrap();
    let mut state = FilterState::new(x0.clone(), p0, &config).unwrap();
    (0..measurements.nrows())
        .map(|i| {
            state = filter
                .step(&state, &measurements.row(i).transpose())
                .unwrap()
                .0;
            state.clone()
        })
        .collect()
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}
