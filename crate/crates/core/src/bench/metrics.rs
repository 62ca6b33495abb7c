use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `RMSE(i) = √( (1/N)(1/M) Σ_k ‖x_i^k − x̂_i^k‖² )` for each step `i`.
///
/// Each trial is a `D×N` matrix with one row per step.
pub fn rmse_series(truths: &[DMatrix<f64>], estimates: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    if truths.is_empty() || truths.len() != estimates.len() {
        return Err(Error::Shape(format!(
            "{} truth trials vs {} estimate trials",
            truths.len(),
            estimates.len()
        )));
    }
    let shape = truths[0].shape();
    if truths.iter().chain(estimates).any(|m| m.shape() != shape) {
        return Err(Error::Shape("trials do not share one D×N shape".into()));
    }
    let (steps, n) = shape;
    let norm = 1.0 / (n as f64 * truths.len() as f64);
    Ok((0..steps)
        .map(|i| {
            let total: f64 = truths
                .iter()
                .zip(estimates)
                .map(|(x, xh)| (x.row(i) - xh.row(i)).norm_squared())
                .sum();
            (total * norm).sqrt()
        })
        .collect())
}

/// Time average of an RMSE series.
pub fn armse(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Input("ARMSE of an empty series".into()));
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}
