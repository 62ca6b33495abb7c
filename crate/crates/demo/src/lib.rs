//! Browser bindings for the filter library. Every export returns a JSON
//! string; errors come back as `{"error": kind, "message": ...}`.

use gsp_srukf::bench::{run_experiment, ExperimentConfig};
use gsp_srukf::graph::{generate_topology, GftBasis, TopologyModel};
use gsp_srukf::loss::LossSpec;
use gsp_srukf::Error;
use nalgebra::DVector;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(result: gsp_srukf::Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.kind(), "message": e.to_string() }).to_string(),
    }
}

/// Loss value and normalised IRLS weight on `points` residuals in `[-range, range]`.
#[wasm_bindgen]
pub fn loss_curves(beta: f64, gamma: f64, sigma: f64, range: f64, points: usize) -> String {
    respond(loss_curves_impl(beta, gamma, sigma, range, points))
}

fn loss_curves_impl(
    beta: f64,
    gamma: f64,
    sigma: f64,
    range: f64,
    points: usize,
) -> gsp_srukf::Result<Value> {
    if !(range > 0.0 && range.is_finite()) || points < 2 {
        return Err(Error::Input(format!(
            "need range > 0 and points >= 2, got {range} and {points}"
        )));
    }
    let specs = [
        ("general", LossSpec::GeneralRobust { beta, gamma }),
        ("huber", LossSpec::Huber { sigma }),
        ("cauchy", LossSpec::Cauchy { sigma }),
        ("quadratic", LossSpec::Unit),
    ];
    let c: Vec<f64> = (0..points)
        .map(|k| -range + 2.0 * range * k as f64 / (points - 1) as f64)
        .collect();
    let mut curves = serde_json::Map::new();
    for (name, spec) in specs {
        spec.validate()?;
        let value = c
            .iter()
            .map(|&x| spec.value(x))
            .collect::<gsp_srukf::Result<Vec<_>>>()?;
        let weight: Vec<f64> = c.iter().map(|&x| spec.weight(x)).collect();
        curves.insert(name.into(), json!({ "value": value, "weight": weight }));
    }
    Ok(json!({ "c": c, "curves": curves }))
}

/// Random graph, its Laplacian spectrum and the graph Fourier transform of a
/// test signal that is smooth on the graph plus `roughness` times the
/// highest-frequency eigenvector.
#[wasm_bindgen]
pub fn graph_spectrum(n: usize, p: f64, seed: u64, roughness: f64) -> String {
    respond(graph_spectrum_impl(n, p, seed, roughness))
}

fn graph_spectrum_impl(n: usize, p: f64, seed: u64, roughness: f64) -> gsp_srukf::Result<Value> {
    let topology = generate_topology(n, TopologyModel::ErdosRenyi { p }, seed)?;
    let basis = GftBasis::from_topology(&topology)?;
    let v = basis.v();
    let signal: DVector<f64> =
        v.column(1) * 2.0 + v.column(n - 1) * roughness + DVector::from_element(n, 1.0);
    let spectrum = basis.forward(&signal);
    let edges: Vec<Value> = topology
        .edges()
        .into_iter()
        .map(|(i, j, w)| json!([i, j, w]))
        .collect();
    Ok(json!({
        "n": n,
        "edges": edges,
        "eigenvalues": basis.delta().as_slice(),
        "signal": signal.as_slice(),
        "spectrum": spectrum.as_slice(),
    }))
}

/// Small Monte Carlo comparison of every filter on one noise scenario.
#[wasm_bindgen]
pub fn compare_filters(scenario: &str, trials: usize, steps: usize, seed: u64) -> String {
    respond(compare_filters_impl(scenario, trials, steps, seed))
}

fn compare_filters_impl(
    scenario: &str,
    trials: usize,
    steps: usize,
    seed: u64,
) -> gsp_srukf::Result<Value> {
    let cfg = ExperimentConfig {
        scenario: scenario.into(),
        trials,
        steps,
        seed,
        workers: 1,
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&cfg)?;
    let filters: Vec<Value> = result
        .filters
        .iter()
        .map(|f| {
            let rmse: Vec<Option<f64>> =
                f.rmse.iter().map(|x| x.is_finite().then_some(*x)).collect();
            json!({
                "name": f.variant.to_string(),
                "armse": f.armse.is_finite().then_some(f.armse),
                "failures": f.failures,
                "rmse": rmse,
            })
        })
        .collect();
    Ok(json!({ "scenario": scenario, "trials": trials, "steps": steps, "filters": filters }))
}
