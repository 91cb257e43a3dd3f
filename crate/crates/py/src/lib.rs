//! Python bindings. Images cross the boundary as lists of rows.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sim::config::MemoryConfig;
use sim::gem1d::{self, SolverSettings};
use sim::manifest::{SimConfig, DEFAULT_CONFIG};
use sim::pulse::{Pulse, PulseSequence};
use sim::{diffusion, metrics, runner, ImageField};

fn py_err(e: sim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_field(rows: Vec<Vec<f64>>, pitch: f64) -> PyResult<ImageField> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("image rows must all have the same length"));
    }
    ImageField::new(width, height, pitch, rows.concat()).map_err(py_err)
}

fn to_rows(img: &ImageField) -> Vec<Vec<f64>> {
    (0..img.height()).map(|y| img.row(y).to_vec()).collect()
}

/// The shipped default configuration as TOML text.
#[pyfunction]
fn default_config() -> &'static str {
    DEFAULT_CONFIG
}

/// Checks a config (file path or defaults, plus `section.key=value`
/// overrides) and returns `(rule, passed, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (config=None, overrides=Vec::new()))]
fn validate(config: Option<PathBuf>, overrides: Vec<String>) -> PyResult<Vec<(String, bool, String)>> {
    let cfg = SimConfig::load(config.as_deref(), &overrides).map_err(py_err)?;
    Ok(cfg.rules().into_iter().map(|r| (r.name, r.passed, r.detail)).collect())
}

/// Runs a scenario into `out` and returns its summary.
#[pyfunction]
#[pyo3(signature = (scenario, out, config=None, overrides=Vec::new()))]
fn run_scenario(
    py: Python<'_>,
    scenario: &str,
    out: PathBuf,
    config: Option<PathBuf>,
    overrides: Vec<String>,
) -> PyResult<Vec<(String, String)>> {
    let cfg = SimConfig::load(config.as_deref(), &overrides).map_err(py_err)?;
    cfg.validate().map_err(py_err)?;
    let report = py
        .detach(|| runner::run_scenario(scenario, &cfg, &out))
        .map_err(py_err)?;
    Ok(report.summary.into_iter().collect())
}

/// Diffuses an image for `time` seconds with coefficient `diffusion` (m²/s).
#[pyfunction]
fn propagate(image: Vec<Vec<f64>>, pitch: f64, diffusion: f64, time: f64) -> PyResult<Vec<Vec<f64>>> {
    let img = to_field(image, pitch)?;
    diffusion::propagate(&img, diffusion, time).map(|r| to_rows(&r)).map_err(py_err)
}

/// Normalised cross-correlation of two images of equal shape.
#[pyfunction]
fn similarity(frame: Vec<Vec<f64>>, reference: Vec<Vec<f64>>) -> PyResult<f64> {
    let a = to_field(frame, 1.0)?;
    let b = to_field(reference, 1.0)?;
    metrics::similarity(&a, &b).map_err(py_err)
}

/// Echo of one Gaussian pulse peaking `peak_time` seconds before the flip
/// (negative) with the default memory. Returns `(t, intensity, efficiency)`.
#[pyfunction]
#[pyo3(signature = (peak_time, width, expansion_ratio=1.0))]
fn echo(py: Python<'_>, peak_time: f64, width: f64, expansion_ratio: f64) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let config = MemoryConfig::default().with_expansion_ratio(expansion_ratio).map_err(py_err)?;
    let pulse = Pulse {
        peak_time,
        width_1e2: width,
        amplitude: 1.0,
        image: ImageField::zeros(1, 1, 1.0).map_err(py_err)?,
    };
    let seq = PulseSequence::new(vec![pulse], config.flip_time).map_err(py_err)?;
    let settings = SolverSettings { record_every: 0, ..SolverSettings::default() };
    let ev = py.detach(|| gem1d::evolve(&config, &seq, &settings)).map_err(py_err)?;
    Ok((ev.trace.t_grid, ev.trace.intensity, ev.trace.efficiency))
}

#[pymodule]
fn gemsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCENARIOS", sim::scenarios::SCENARIOS.to_vec())?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(echo, m)?)?;
    Ok(())
}
