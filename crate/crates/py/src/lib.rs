//! Python bindings: the medium, the skew Brownian kernel and sampler, PDE
//! survival curves and the experiment runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

use interface_lab_core::experiments::{
    Experiment, FptConfig, KernelCheckConfig, MartingaleConfig, OccupationConfig, PdeVsMcConfig,
};
use interface_lab_core::functionals::{empirical_survival, PassageSimulator};
use interface_lab_core::parallel::ensemble;
use interface_lab_core::pde::{self, SurvivalSettings};
use interface_lab_core::{sbm, RngStream, TwoSidedMedium};

fn py_err(e: interface_lab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Dispersion pair and interface parameter.
#[pyclass(name = "Medium", module = "interface_lab", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyMedium {
    inner: TwoSidedMedium,
}

#[pymethods]
impl PyMedium {
    #[new]
    fn new(d_plus: f64, d_minus: f64, lam: f64) -> PyResult<Self> {
        TwoSidedMedium::new(d_plus, d_minus, lam)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Medium with the flux-continuity interface condition.
    #[staticmethod]
    fn flux_continuous(d_plus: f64, d_minus: f64) -> PyResult<Self> {
        TwoSidedMedium::flux_continuous(d_plus, d_minus)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Medium for the upwelling model with recharge `r`, flow `f < 0` and
    /// thickness slopes on each side.
    #[staticmethod]
    fn from_upwelling(r: f64, f: f64, h_slope_plus: f64, h_slope_minus: f64) -> PyResult<Self> {
        TwoSidedMedium::from_upwelling(r, f, h_slope_plus, h_slope_minus)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn d_plus(&self) -> f64 {
        self.inner.d_plus()
    }

    #[getter]
    fn d_minus(&self) -> f64 {
        self.inner.d_minus()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn alpha_star(&self) -> f64 {
        self.inner.alpha_star()
    }

    #[getter]
    fn critical_lambda(&self) -> f64 {
        self.inner.critical_lambda()
    }

    fn scale(&self, x: f64) -> PyResult<f64> {
        self.inner.try_scale(x).map_err(py_err)
    }

    fn unscale(&self, y: f64) -> PyResult<f64> {
        self.inner.try_unscale(y).map_err(py_err)
    }

    fn dispersion_at(&self, y: f64) -> f64 {
        self.inner.dispersion_at(y)
    }

    fn __repr__(&self) -> String {
        format!(
            "Medium(d_plus={}, d_minus={}, lam={})",
            self.inner.d_plus(),
            self.inner.d_minus(),
            self.inner.lambda()
        )
    }
}

/// Canonical transmission parameter.
#[pyfunction]
fn alpha_star(d_plus: f64, d_minus: f64, lam: f64) -> PyResult<f64> {
    TwoSidedMedium::new(d_plus, d_minus, lam)
        .map(|m| m.alpha_star())
        .map_err(py_err)
}

/// Skew Brownian motion transition density `p(t, x, y)`.
#[pyfunction]
fn transition_density(alpha: f64, x: f64, t: f64, y: f64) -> PyResult<f64> {
    sbm::transition_density(alpha, x, t, y).map_err(py_err)
}

/// Skew Brownian motion transition CDF `P(B_t <= y | B_0 = x)`.
#[pyfunction]
fn transition_cdf(alpha: f64, x: f64, t: f64, y: f64) -> PyResult<f64> {
    sbm::transition_cdf(alpha, x, t, y).map_err(py_err)
}

/// Skew Brownian path on the grid `0, dt, ..., t_max`.
#[pyfunction]
#[pyo3(signature = (alpha, x0, dt, t_max, seed, stream=0))]
fn sample_path(alpha: f64, x0: f64, dt: f64, t_max: f64, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
    let mut rng = RngStream::new(seed, stream);
    sbm::sample_path(alpha, x0, dt, t_max, &mut rng)
        .map(|p| p.x_values().to_vec())
        .map_err(py_err)
}

/// Physical path `Y = s(B)` under the medium's canonical parameter.
#[pyfunction]
#[pyo3(signature = (medium, y0, dt, t_max, seed, stream=0))]
fn physical_path(medium: PyMedium, y0: f64, dt: f64, t_max: f64, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
    let mut rng = RngStream::new(seed, stream);
    sbm::physical_path(&medium.inner, y0, dt, t_max, &mut rng)
        .map(|p| p.y_values())
        .map_err(py_err)
}

/// Monte Carlo survival `P(T > t)` of the passage from `y0` to `detector`,
/// returned as `(probabilities, standard_errors)` at `times`.
#[pyfunction]
#[pyo3(signature = (medium, y0, detector, times, paths, dt, seed, bridge_correction=true, threads=0))]
#[allow(clippy::too_many_arguments)]
fn mc_survival(
    py: Python<'_>,
    medium: PyMedium,
    y0: f64,
    detector: f64,
    times: Vec<f64>,
    paths: usize,
    dt: f64,
    seed: u64,
    bridge_correction: bool,
    threads: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let m = medium.inner;
    let sim = PassageSimulator::new(&m, m.alpha_star(), y0, detector, dt, t_max, bridge_correction).map_err(py_err)?;
    let samples = py
        .detach(|| ensemble(paths, seed, threads, |rng| sim.run(rng)))
        .map_err(py_err)?;
    Ok(empirical_survival(&samples, &times).into_iter().unzip())
}

/// PDE survival curve `(times, survival)` for the passage from `y0` to
/// `detector`.
#[pyfunction]
#[pyo3(signature = (medium, y0, detector, h, dt, t_max, far_width=None))]
#[allow(clippy::too_many_arguments)]
fn survival_curve(
    py: Python<'_>,
    medium: PyMedium,
    y0: f64,
    detector: f64,
    h: f64,
    dt: f64,
    t_max: f64,
    far_width: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let settings = SurvivalSettings {
        h,
        dt,
        t_max,
        far_width,
    };
    let curve = py
        .detach(|| pde::survival_curve(&medium.inner, y0, detector, settings))
        .map_err(py_err)?;
    Ok((curve.times, curve.survival))
}

/// Default configuration of an experiment, as a JSON object string.
#[pyfunction]
fn default_config(name: &str) -> PyResult<String> {
    let e = default_experiment(name)?;
    Ok(interface_lab_core::report::to_json_string(&config_object(&e)))
}

/// Runs an experiment and returns its JSON report.
///
/// `config` is a JSON object whose keys override the defaults.
#[pyfunction]
#[pyo3(signature = (name, config=None, threads=0))]
fn run_experiment(py: Python<'_>, name: &str, config: Option<&str>, threads: usize) -> PyResult<String> {
    let experiment = build_experiment(name, config).map_err(PyValueError::new_err)?;
    let report = py.detach(|| experiment.run(threads)).map_err(py_err)?;
    Ok(report.to_json())
}

fn default_experiment(name: &str) -> PyResult<Experiment> {
    Ok(match name {
        "kernel-check" => Experiment::KernelCheck(KernelCheckConfig::default()),
        "fpt" => Experiment::Fpt(FptConfig::default()),
        "occupation" => Experiment::Occupation(OccupationConfig::default()),
        "martingale" => Experiment::Martingale(MartingaleConfig::default()),
        "pde-vs-mc" => Experiment::PdeVsMc(PdeVsMcConfig::default()),
        _ => return Err(PyValueError::new_err(format!("unknown experiment {name:?}"))),
    })
}

fn config_object(e: &Experiment) -> Value {
    let mut v = serde_json::to_value(e).expect("configs serialize");
    v.as_object_mut().expect("tagged object").remove("experiment");
    v
}

/// Overlays a JSON object on the default configuration of `name`.
pub fn build_experiment(name: &str, config: Option<&str>) -> Result<Experiment, String> {
    let base = default_experiment(name).map_err(|_| format!("unknown experiment {name:?}"))?;
    let mut merged = serde_json::to_value(&base).expect("configs serialize");
    if let Some(text) = config {
        let overrides: Value = serde_json::from_str(text).map_err(|e| format!("invalid config JSON: {e}"))?;
        let Value::Object(overrides) = overrides else {
            return Err("config must be a JSON object".into());
        };
        let target = merged.as_object_mut().expect("tagged object");
        for (k, v) in overrides {
            if k == "experiment" || !target.contains_key(&k) {
                return Err(format!("unknown config key {k:?} for {name}"));
            }
            target.insert(k, v);
        }
    }
    serde_json::from_value(merged).map_err(|e| format!("invalid config: {e}"))
}

#[pymodule]
fn interface_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMedium>()?;
    m.add_function(wrap_pyfunction!(alpha_star, m)?)?;
    m.add_function(wrap_pyfunction!(transition_density, m)?)?;
    m.add_function(wrap_pyfunction!(transition_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    m.add_function(wrap_pyfunction!(physical_path, m)?)?;
    m.add_function(wrap_pyfunction!(mc_survival, m)?)?;
    m.add_function(wrap_pyfunction!(survival_curve, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("DEFAULT_SEED", interface_lab_core::rng::DEFAULT_MASTER_SEED)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_merge_over_defaults() {
        let e = build_experiment("fpt", Some(r#"{"paths": 10, "y": 2.0}"#)).unwrap();
        let Experiment::Fpt(c) = e else { panic!() };
        assert_eq!((c.paths, c.y, c.dt), (10, 2.0, FptConfig::default().dt));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(build_experiment("nope", None).is_err());
        assert!(build_experiment("fpt", Some(r#"{"bogus": 1}"#))
            .unwrap_err()
            .contains("bogus"));
        assert!(build_experiment("fpt", Some("[1]")).is_err());
        assert!(build_experiment("fpt", Some(r#"{"paths": "x"}"#)).is_err());
        assert!(build_experiment("fpt", Some(r#"{"experiment": "occupation"}"#)).is_err());
    }
}
