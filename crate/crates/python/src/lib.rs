//! Python bindings: configuration, staged pipeline runs, backbone curves and
//! power–Fourier maps.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use quasifoil::cli::{self, PipelineConfig, PipelineRun, Stage};
use quasifoil::manifold::Method;
use quasifoil::odemap::{builtin_model, stroboscopic_map as strobe, StroboscopicMapSpec};
use quasifoil::polyalg;
use quasifoil::rom::{parse_method, BackboneCurves};
use quasifoil::Error;

create_exception!(pyquasifoil, QuasifoilError, PyException, "A computation in quasifoil failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::UnknownModel(_) | Error::DimensionMismatch(_) | Error::IncompatibleRuns(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => QuasifoilError::new_err(other.to_string()),
    }
}

fn stage_of(name: &str) -> PyResult<Stage> {
    Ok(match name {
        "torus" => Stage::Torus,
        "spectrum" => Stage::Spectrum,
        "foliate" => Stage::Foliate,
        "manifold" => Stage::Manifold,
        "rom" => Stage::Rom,
        other => return Err(PyValueError::new_err(format!("unknown stage `{other}`"))),
    })
}

fn method_of(name: &str) -> PyResult<Method> {
    parse_method(name).ok_or_else(|| PyValueError::new_err(format!("unknown method `{name}`; use foil, map or ode")))
}

/// Pipeline configuration. Keyword arguments override the defaults.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (model="onemass", amplitude=0.0, omega_f=1.2, mode=Some(1), clusters=None, sigma=7, ell=7, dt=0.8, r_order=None, r_min=1e-4, r_max=0.5, r_points=64))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        model: &str,
        amplitude: f64,
        omega_f: f64,
        mode: Option<usize>,
        clusters: Option<Vec<usize>>,
        sigma: usize,
        ell: usize,
        dt: f64,
        r_order: Option<usize>,
        r_min: f64,
        r_max: f64,
        r_points: usize,
    ) -> PyResult<Self> {
        let inner = PipelineConfig {
            model: model.into(),
            amplitude,
            omega_f,
            mode: if clusters.is_some() { None } else { mode },
            clusters,
            sigma,
            ell,
            dt,
            r_order,
            r_min,
            r_max,
            r_points,
            ..Default::default()
        };
        inner.validate().map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = PipelineConfig::from_toml(text).map_err(to_py)?;
        inner.validate().map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.model.clone()
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    #[getter]
    fn sigma(&self) -> usize {
        self.inner.sigma
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(model={:?}, amplitude={}, mode={:?}, sigma={}, ell={})",
            self.inner.model, self.inner.amplitude, self.inner.mode, self.inner.sigma, self.inner.ell
        )
    }
}

/// Truncated power–Fourier series map.
#[pyclass(name = "PowerFourierMap", from_py_object)]
#[derive(Clone)]
struct PyMap {
    inner: polyalg::PowerFourierMap,
}

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyMap { inner: polyalg::PowerFourierMap::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.inner.n_in
    }

    #[getter]
    fn n_out(&self) -> usize {
        self.inner.n_out
    }

    #[getter]
    fn sigma(&self) -> usize {
        self.inner.sigma
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega_f
    }

    fn evaluate(&self, x: Vec<Complex64>, theta: f64) -> PyResult<Vec<Complex64>> {
        self.inner.evaluate(&x, theta).map_err(to_py)
    }

    /// `self(other(x, theta), theta)`.
    fn compose(&self, other: &PyMap) -> PyResult<PyMap> {
        Ok(PyMap { inner: self.inner.compose(&other.inner).map_err(to_py)? })
    }

    /// The map with its angle argument advanced by `delta`.
    fn shift(&self, delta: f64) -> PyMap {
        PyMap { inner: self.inner.shift(delta) }
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// Coefficient of output `i`, monomial exponents `exps` and harmonic `k`.
    fn coefficient(&self, i: usize, exps: Vec<u8>, k: i64) -> PyResult<Complex64> {
        let t = self.inner.monomials();
        let m = t
            .index_of(&exps)
            .ok_or_else(|| PyValueError::new_err(format!("no monomial {exps:?} up to order {}", self.inner.sigma)))?;
        if i >= self.inner.n_out || k.unsigned_abs() as usize > self.inner.ell {
            return Err(PyValueError::new_err("output or harmonic out of range"));
        }
        Ok(self.inner.get(i, m, k))
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!("PowerFourierMap(n_in={}, n_out={}, sigma={}, ell={})", s.n_in, s.n_out, s.sigma, s.ell)
    }
}

/// Backbone curves of one method on an amplitude grid.
#[pyclass(name = "Backbone", get_all, from_py_object)]
#[derive(Clone)]
struct PyBackbone {
    r: Vec<f64>,
    amplitude: Vec<f64>,
    omega: Vec<f64>,
    zeta: Vec<f64>,
    e_rel: Vec<f64>,
    source: String,
}

impl From<&BackboneCurves> for PyBackbone {
    fn from(b: &BackboneCurves) -> Self {
        PyBackbone {
            r: b.r_grid.clone(),
            amplitude: b.amplitude.clone(),
            omega: b.omega.clone(),
            zeta: b.zeta.clone(),
            e_rel: b.e_rel.clone(),
            source: b.source.clone(),
        }
    }
}

#[pymethods]
impl PyBackbone {
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok((&BackboneCurves::read_csv(&path).map_err(to_py)?).into())
    }

    fn __len__(&self) -> usize {
        self.r.len()
    }

    fn __repr__(&self) -> String {
        format!("Backbone(source={:?}, points={})", self.source, self.r.len())
    }
}

/// Results of a pipeline run up to a stage.
#[pyclass(name = "Pipeline", frozen)]
struct PyPipeline {
    run: PipelineRun,
}

#[pymethods]
impl PyPipeline {
    /// Runs every stage up to `until` (`torus`, `spectrum`, `foliate`, `manifold` or `rom`).
    #[staticmethod]
    #[pyo3(signature = (config, until="rom"))]
    fn run(py: Python<'_>, config: &PyConfig, until: &str) -> PyResult<Self> {
        let stage = stage_of(until)?;
        let cfg = config.inner.clone();
        let run = py.detach(|| PipelineRun::execute(&cfg, stage)).map_err(to_py)?;
        Ok(PyPipeline { run })
    }

    fn backbone(&self, method: &str) -> PyResult<PyBackbone> {
        let m = method_of(method)?;
        self.run
            .backbone(m)
            .map(PyBackbone::from)
            .ok_or_else(|| PyValueError::new_err("run stopped before the rom stage"))
    }

    /// Spectral quotient of every cluster, `None` where undefined.
    fn quotients(&self) -> Vec<Option<f64>> {
        self.run.quotients()
    }

    /// Invariant torus sampled as rows `theta, x_1, ..., x_n`.
    #[pyo3(signature = (points=64))]
    fn torus(&self, points: usize) -> Vec<Vec<f64>> {
        self.run.torus.torus.sample(points)
    }

    /// `(U, R, V)`: encoder, conjugate map and complementary encoder.
    fn foliation(&self) -> PyResult<(PyMap, PyMap, PyMap)> {
        let f = self
            .run
            .foliation
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("run stopped before the foliation stage"))?;
        Ok((PyMap { inner: f.u.u.clone() }, PyMap { inner: f.u.r.clone() }, PyMap { inner: f.v.u.clone() }))
    }

    /// `(W, R)` of one method. `W` maps into the bundle frame, or into state
    /// coordinates about the torus when `physical` is set.
    #[pyo3(signature = (method, physical=false))]
    fn manifold(&self, method: &str, physical: bool) -> PyResult<(PyMap, PyMap)> {
        let ms = self
            .run
            .manifolds
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("run stopped before the manifold stage"))?;
        let m = match method_of(method)? {
            Method::Foil => &ms.foil,
            Method::Map => &ms.map,
            Method::Ode => &ms.ode,
        };
        let w = match (physical, &self.run.spectrum) {
            (true, Some(sp)) => m.physical(&sp.dec),
            _ => m.w.clone(),
        };
        Ok((PyMap { inner: w }, PyMap { inner: m.r.clone() }))
    }

    /// The run report as a JSON string.
    fn report_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.run.report()).map_err(|e| to_py(e.into()))
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.run.warnings.clone()
    }

    /// Writes every artifact of the run into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        self.run.write(&dir).map_err(to_py)
    }
}

/// Taylor–Fourier expansion of the sampling-period map of a built-in model.
#[pyfunction]
#[pyo3(signature = (model, amplitude=0.0, omega_f=1.2, sigma=3, ell=0, dt=0.8, steps=16))]
fn stroboscopic_map(
    model: &str,
    amplitude: f64,
    omega_f: f64,
    sigma: usize,
    ell: usize,
    dt: f64,
    steps: usize,
) -> PyResult<PyMap> {
    let m = builtin_model(model, amplitude, omega_f).map_err(to_py)?;
    let spec = StroboscopicMapSpec { dt, steps, sigma, ell };
    Ok(PyMap { inner: strobe(&m, &spec, None).map_err(to_py)? })
}

/// Compares the backbone curves of run directories and writes the summary into `out`.
/// Returns the comparison as a JSON string.
#[pyfunction]
fn compare(runs: Vec<PathBuf>, out: PathBuf) -> PyResult<String> {
    let c = cli::compare(&runs, &out).map_err(to_py)?;
    serde_json::to_string(&c).map_err(|e| to_py(e.into()))
}

#[pymodule]
fn pyquasifoil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyMap>()?;
    m.add_class::<PyBackbone>()?;
    m.add_class::<PyPipeline>()?;
    m.add_function(wrap_pyfunction!(stroboscopic_map, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("QuasifoilError", m.py().get_type::<QuasifoilError>())?;
    Ok(())
}
