use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use relerr_halfspace as core;
use relerr_halfspace::harness::{self, ExperimentConfig, Suite};
use relerr_halfspace::{ConstantOverrides, ConstantSchedule, Probability};

create_exception!(relerr_halfspace, RelerrError, PyValueError);

fn err(e: core::Error) -> PyErr {
    RelerrError::new_err(e.to_string())
}

fn prob(p: f64) -> PyResult<Probability> {
    Probability::new(p).map_err(err)
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| RelerrError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| RelerrError::new_err(e.to_string()))
}

fn schedule(preset: &str, constants: Option<&Bound<'_, PyDict>>) -> PyResult<ConstantSchedule> {
    let overrides: ConstantOverrides = match constants {
        Some(d) => from_py(d.as_any())?,
        None => ConstantOverrides::default(),
    };
    ConstantSchedule::preset(preset).and_then(|c| c.with_overrides(&overrides)).map_err(err)
}

#[pyfunction]
fn gaussian_pdf(x: f64) -> PyResult<f64> {
    core::gaussian_pdf(x).map_err(err)
}

#[pyfunction]
fn gaussian_cdf(x: f64) -> PyResult<f64> {
    core::gaussian_cdf(x).map_err(err)
}

#[pyfunction]
fn gaussian_sf(x: f64) -> PyResult<f64> {
    core::gaussian_sf(x).map_err(err)
}

#[pyfunction]
fn gaussian_quantile(p: f64) -> PyResult<f64> {
    Ok(core::gaussian_quantile(prob(p)?))
}

#[pyfunction]
fn isoperimetric(p: f64) -> PyResult<f64> {
    Ok(core::isoperimetric(prob(p)?))
}

#[pyfunction]
fn u_weight(p: f64) -> PyResult<f64> {
    Ok(core::u_weight(prob(p)?))
}

#[pyfunction]
fn psi(p: f64) -> PyResult<f64> {
    core::psi(prob(p)?).map_err(err)
}

#[pyfunction]
fn v_ratio(p: f64) -> PyResult<f64> {
    core::v_ratio(prob(p)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, p_floor = core::gauss::DEFAULT_P_FLOOR))]
fn v_inverse(a: f64, p_floor: f64) -> PyResult<f64> {
    core::v_inverse(a, prob(p_floor)?).map(Probability::get).map_err(err)
}

#[pyclass(name = "FunctionSpec", frozen, skip_from_py_object, module = "relerr_halfspace")]
#[derive(Clone)]
struct PyFunctionSpec(core::FunctionSpec);

#[pymethods]
impl PyFunctionSpec {
    #[staticmethod]
    fn halfspace(direction: Vec<f64>, threshold: f64) -> PyResult<Self> {
        core::FunctionSpec::halfspace(direction, threshold).map(Self).map_err(err)
    }

    #[staticmethod]
    fn halfspace_with_volume(direction: Vec<f64>, volume: f64) -> PyResult<Self> {
        core::FunctionSpec::halfspace_with_volume(direction, prob(volume)?).map(Self).map_err(err)
    }

    #[staticmethod]
    fn slab(direction: Vec<f64>, lower: f64, upper: f64) -> PyResult<Self> {
        core::FunctionSpec::slab(direction, lower, upper).map(Self).map_err(err)
    }

    #[staticmethod]
    fn central_slab(direction: Vec<f64>, volume: f64) -> PyResult<Self> {
        core::FunctionSpec::central_slab(direction, prob(volume)?).map(Self).map_err(err)
    }

    /// `halfspaces` is a list of `(direction, threshold)` pairs.
    #[staticmethod]
    fn union_of_halfspaces(halfspaces: Vec<(Vec<f64>, f64)>) -> PyResult<Self> {
        let hs = halfspaces
            .into_iter()
            .map(|(direction, threshold)| core::HalfspaceParams { direction, threshold })
            .collect();
        core::FunctionSpec::union_of_halfspaces(hs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn centered_ball(dimension: usize, radius: f64) -> PyResult<Self> {
        core::FunctionSpec::centered_ball(dimension, radius).map(Self).map_err(err)
    }

    #[staticmethod]
    fn ball_with_volume(dimension: usize, volume: f64) -> PyResult<Self> {
        core::FunctionSpec::ball_with_volume(dimension, prob(volume)?).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(dimension: usize, value: bool) -> PyResult<Self> {
        core::FunctionSpec::constant(dimension, value).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::FunctionSpec::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.0.variant_name()
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<bool> {
        self.0.evaluate(&x).map_err(err)
    }

    fn exact_volume(&self) -> PyResult<f64> {
        self.0.exact_volume().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("FunctionSpec({}, dimension={})", self.0.variant_name(), self.0.dimension())
    }
}

#[pyclass(name = "OracleBundle", module = "relerr_halfspace")]
struct PyOracleBundle(core::OracleBundle);

#[pymethods]
impl PyOracleBundle {
    /// `mode` is "auto" or "rejection".
    #[new]
    #[pyo3(signature = (spec, seed, mode = "auto"))]
    fn new(spec: &PyFunctionSpec, seed: u64, mode: &str) -> PyResult<Self> {
        let mode = match mode {
            "auto" => core::SamplerMode::Auto,
            "rejection" => core::SamplerMode::Rejection,
            other => return Err(RelerrError::new_err(format!("unknown sampler mode `{other}`"))),
        };
        core::OracleBundle::with_mode(spec.0.clone(), seed, mode).map(Self).map_err(err)
    }

    fn query(&mut self, x: Vec<f64>) -> PyResult<bool> {
        self.0.query(&x).map_err(err)
    }

    fn sample(&mut self) -> PyResult<Vec<f64>> {
        self.0.sample().map_err(err)
    }

    #[getter]
    fn mq_count(&self) -> u64 {
        self.0.mq_count()
    }

    #[getter]
    fn samp_count(&self) -> u64 {
        self.0.samp_count()
    }

    #[getter]
    fn spec(&self) -> PyFunctionSpec {
        PyFunctionSpec(self.0.spec().clone())
    }
}

#[pyfunction]
fn noise_perturb(x: Vec<f64>, t: f64, seed: u64) -> PyResult<Vec<f64>> {
    core::noise_perturb(&x, t, &mut seeded(seed)).map_err(err)
}

#[pyfunction]
fn est_sense<'py>(py: Python<'py>, bundle: &mut PyOracleBundle, t: f64, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
    let est = core::est_sense(&mut bundle.0, t, kappa).map_err(err)?;
    to_py(py, &est)
}

#[pyfunction]
#[pyo3(signature = (bundle, m, off_diagonal = false))]
fn pairwise_t(bundle: &mut PyOracleBundle, m: u64, off_diagonal: bool) -> PyResult<f64> {
    let mode = if off_diagonal { core::PairMode::OffDiagonal } else { core::PairMode::AllPairs };
    core::pairwise_t_with(&mut bundle.0, m, mode).map(|s| s.value).map_err(err)
}

fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Returns `(estimate, standard_error)`.
#[pyfunction]
fn mc_volume(spec: &PyFunctionSpec, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    core::mc_volume(&spec.0, n_samples, &mut seeded(seed)).map_err(err)
}

/// Returns `(estimate, standard_error)`.
#[pyfunction]
fn mc_relative_distance(f: &PyFunctionSpec, g: &PyFunctionSpec, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    core::mc_relative_distance(&f.0, &g.0, n_samples, &mut seeded(seed)).map_err(err)
}

#[pyfunction]
fn mc_levelk_weight(spec: &PyFunctionSpec, k: u8, n_samples: u64, seed: u64) -> PyResult<f64> {
    core::mc_levelk_weight(&spec.0, k, n_samples, &mut seeded(seed)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (bundle, eps, p_hat, preset = "default", constants = None))]
fn gsa_test<'py>(
    py: Python<'py>,
    bundle: &mut PyOracleBundle,
    eps: f64,
    p_hat: f64,
    preset: &str,
    constants: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = schedule(preset, constants)?;
    let v = core::gsa_test(&mut bundle.0, eps, prob(p_hat)?, &c).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (bundle, eps, p_hat, preset = "default", constants = None))]
fn hermite_test<'py>(
    py: Python<'py>,
    bundle: &mut PyOracleBundle,
    eps: f64,
    p_hat: f64,
    preset: &str,
    constants: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = schedule(preset, constants)?;
    let v = core::hermite_test(&mut bundle.0, eps, prob(p_hat)?, &c).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (bundle, eps, p2, p_min, preset = "default", constants = None))]
fn gsa_fixed_noise_test<'py>(
    py: Python<'py>,
    bundle: &mut PyOracleBundle,
    eps: f64,
    p2: f64,
    p_min: f64,
    preset: &str,
    constants: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = schedule(preset, constants)?;
    let v = core::gsa_fixed_noise_test(&mut bundle.0, eps, prob(p2)?, prob(p_min)?, &c).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (bundle, eps, p_min, preset = "default", constants = None))]
fn combined_test<'py>(
    py: Python<'py>,
    bundle: &mut PyOracleBundle,
    eps: f64,
    p_min: f64,
    preset: &str,
    constants: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = schedule(preset, constants)?;
    let v = core::combined_test(&mut bundle.0, eps, prob(p_min)?, &c).map_err(err)?;
    to_py(py, &v)
}

/// Resolved constants of a preset as a dict.
#[pyfunction]
#[pyo3(signature = (preset = "default", constants = None))]
fn constant_schedule<'py>(
    py: Python<'py>,
    preset: &str,
    constants: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &schedule(preset, constants)?)
}

#[pyfunction]
fn defaults_version() -> &'static str {
    core::defaults_version()
}

/// Takes an experiment config dict and returns the report dict.
#[pyfunction]
#[pyo3(signature = (config, jobs = None))]
fn run_experiment<'py>(py: Python<'py>, config: &Bound<'py, PyAny>, jobs: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig = from_py(config)?;
    let report = py.detach(|| harness::run_experiment_with_jobs(&cfg, jobs)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn run_validation_suite<'py>(py: Python<'py>, suite: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let report = py.detach(|| harness::run_validation_suite(suite, seed));
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "relerr_halfspace")]
fn relerr_halfspace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RelerrError", m.py().get_type::<RelerrError>())?;
    m.add_class::<PyFunctionSpec>()?;
    m.add_class::<PyOracleBundle>()?;
    m.add_function(wrap_pyfunction!(gaussian_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_sf, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(isoperimetric, m)?)?;
    m.add_function(wrap_pyfunction!(u_weight, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(v_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(v_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(noise_perturb, m)?)?;
    m.add_function(wrap_pyfunction!(est_sense, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_t, m)?)?;
    m.add_function(wrap_pyfunction!(mc_volume, m)?)?;
    m.add_function(wrap_pyfunction!(mc_relative_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mc_levelk_weight, m)?)?;
    m.add_function(wrap_pyfunction!(gsa_test, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_test, m)?)?;
    m.add_function(wrap_pyfunction!(gsa_fixed_noise_test, m)?)?;
    m.add_function(wrap_pyfunction!(combined_test, m)?)?;
    m.add_function(wrap_pyfunction!(constant_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(defaults_version, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_validation_suite, m)?)?;
    Ok(())
}
