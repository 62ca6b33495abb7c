use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::experiment::RunResult;
use crate::error::{Error, Result};

/// `%.{digits}g` formatting: shortest of fixed or scientific notation with
/// trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

const CSV_DIGITS: usize = 9;

/// Writes `rmse.csv`, `armse.csv`, `config.resolved` and `graph.edges` into `dir`.
pub fn emit_csv(result: &RunResult, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;

    let mut rmse = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string()];
    header.extend(result.filters.iter().map(|f| f.variant.name().to_string()));
    rmse.write_record(&header).map_err(csv_error)?;
    let steps = result.filters.first().map_or(0, |f| f.rmse.len());
    for i in 0..steps {
        let mut row = vec![(i + 1).to_string()];
        row.extend(
            result
                .filters
                .iter()
                .map(|f| format_sig(f.rmse[i], CSV_DIGITS)),
        );
        rmse.write_record(&row).map_err(csv_error)?;
    }
    write(dir, "rmse.csv", &into_bytes(rmse)?)?;

    let mut armse = csv::Writer::from_writer(Vec::new());
    armse
        .write_record(["filter", "armse", "failures"])
        .map_err(csv_error)?;
    for f in &result.filters {
        armse
            .write_record([
                f.variant.name(),
                &format_sig(f.armse, CSV_DIGITS),
                &f.failures.to_string(),
            ])
            .map_err(csv_error)?;
    }
    write(dir, "armse.csv", &into_bytes(armse)?)?;

    write(dir, "config.resolved", config.to_toml()?.as_bytes())?;
    write(
        dir,
        "graph.edges",
        result.topology.to_edge_list().as_bytes(),
    )
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| io_error(&path, e))
}
