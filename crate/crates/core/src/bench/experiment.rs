use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ExperimentConfig;
use super::metrics::armse;
use crate::error::{Error, Result};
use crate::filter::{FilterState, FilterVariant, SigmaPointFilter};
use crate::graph::{generate_topology, GftBasis, GraphTopology};
use crate::model::{benchmark_initial_state, simulate_trajectory_with, BenchmarkModel};
use crate::noise::NoiseSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub variant: FilterVariant,
    /// RMSE per step over the trials that completed.
    pub rmse: Vec<f64>,
    pub armse: f64,
    /// Trials dropped because the filter hit a numerical error.
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub filters: Vec<FilterResult>,
    pub topology: GraphTopology,
    pub trial_seeds: Vec<u64>,
    pub elapsed: Duration,
}

impl RunResult {
    pub fn get(&self, variant: FilterVariant) -> Option<&FilterResult> {
        self.filters.iter().find(|f| f.variant == variant)
    }
}

/// Seed of trial `k`: a splitmix64 scramble of the master seed and the index.
pub fn trial_seed(master: u64, k: usize) -> u64 {
    let mut z = master.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Squared error `‖x_i − x̂_i‖²` per step, or `None` when the filter failed.
type TrialErrors = Vec<Option<Vec<f64>>>;

struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    model: BenchmarkModel,
    basis: GftBasis,
    process: NoiseSpec,
    measurement: NoiseSpec,
}

impl Setup<'_> {
    fn trial(&self, seed: u64) -> Result<TrialErrors> {
        let cfg = self.cfg;
        let n = cfg.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = benchmark_initial_state(n);
        let perturb =
            Normal::new(0.0, cfg.init_variance.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
        let x_init = DVector::from_fn(n, |i, _| x0[i] + perturb.sample(&mut rng));
        let traj = simulate_trajectory_with(
            &self.model,
            &self.process,
            &self.measurement,
            &x0,
            cfg.steps,
            &mut rng,
        )?;
        let p0 = DMatrix::identity(n, n) * cfg.init_variance;

        cfg.filters
            .iter()
            .map(|&variant| {
                let fc = cfg.filter_config(variant);
                let filter = SigmaPointFilter::new(&self.model, &self.basis, fc)?;
                let initial = FilterState::new(x_init.clone(), &p0, &fc)?;
                Ok(match filter.run(&initial, &traj.measurements) {
                    Ok(est) => Some(
                        (0..cfg.steps)
                            .map(|i| (traj.states.row(i) - est.row(i)).norm_squared())
                            .collect(),
                    ),
                    Err(e) if e.is_recoverable() => None,
                    Err(e) => return Err(e),
                })
            })
            .collect()
    }
}

// No monotonic clock on bare wasm32.
fn clock() -> Option<Instant> {
    if cfg!(target_arch = "wasm32") {
        None
    } else {
        Some(Instant::now())
    }
}

/// Runs every configured filter on `trials` independent trajectories that
/// share one graph. Trials run in parallel; aggregation is in trial order so
/// results do not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = clock();
    let topology = generate_topology(cfg.n, cfg.graph.model, cfg.graph.seed)?;
    let setup = Setup {
        cfg,
        model: BenchmarkModel::new(cfg.n, cfg.phi, cfg.process_variance, cfg.nominal_r)?,
        basis: GftBasis::from_topology(&topology)?,
        process: NoiseSpec::Gaussian {
            mean: 0.0,
            variance: cfg.process_variance,
        },
        measurement: cfg.measurement_noise()?,
    };
    let trial_seeds: Vec<u64> = (0..cfg.trials).map(|k| trial_seed(cfg.seed, k)).collect();
    let per_trial = run_trials(&setup, &trial_seeds, cfg.workers)?;

    let norm = cfg.n as f64;
    let filters = cfg
        .filters
        .iter()
        .enumerate()
        .map(|(f, &variant)| {
            let mut sum = vec![0.0; cfg.steps];
            let mut ok = 0usize;
            for errs in per_trial.iter().filter_map(|t| t[f].as_ref()) {
                ok += 1;
                sum.iter_mut().zip(errs).for_each(|(s, e)| *s += e);
            }
            let rmse: Vec<f64> = if ok == 0 {
                vec![f64::NAN; cfg.steps]
            } else {
                sum.iter()
                    .map(|s| (s / (norm * ok as f64)).sqrt())
                    .collect()
            };
            let armse = armse(&rmse)?;
            Ok(FilterResult {
                variant,
                rmse,
                armse,
                failures: cfg.trials - ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RunResult {
        filters,
        topology,
        trial_seeds,
        elapsed: start.map_or(Duration::ZERO, |t| t.elapsed()),
    })
}

#[cfg(feature = "parallel")]
fn run_trials(setup: &Setup<'_>, seeds: &[u64], workers: usize) -> Result<Vec<TrialErrors>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| setup.trial(s)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_trials(setup: &Setup<'_>, seeds: &[u64], _workers: usize) -> Result<Vec<TrialErrors>> {
    seeds.iter().map(|&s| setup.trial(s)).collect()
}
