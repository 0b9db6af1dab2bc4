//! Python bindings for `lis-core`.
//!
//! Scalars and tuples cross the boundary directly. Experiment configurations
//! and results are exchanged as plain dicts with the same field names as the
//! serde representation of the Rust types.

use lis_core::capacity::{self, LineConfig, LinePower, PsdValue};
use lis_core::experiments::{self, ExperimentConfig, Preset};
use lis_core::gram::{self, GramMode};
use lis_core::quadrature::{self, QuadratureConfig};
use lis_core::{fields, Error, Extent, NoiseModel, SurfaceSpec, Terminal, Wavelength};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        Error::InvalidInput(_) => PyValueError::new_err(msg),
        Error::BudgetExceeded { .. } | Error::Numerical(_) => PyArithmeticError::new_err(msg),
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => PyOSError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for lis_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn wavelength(lam: f64) -> PyResult<Wavelength> {
    Wavelength::new(lam).py()
}

fn extent(v: f64) -> PyResult<Extent> {
    if v == f64::INFINITY {
        Ok(Extent::Infinite)
    } else {
        Extent::finite(v).py()
    }
}

fn surface(a: f64, b: f64) -> PyResult<SurfaceSpec> {
    SurfaceSpec::new(extent(a)?, extent(b)?).py()
}

fn terminal(t: (f64, f64, f64, f64)) -> PyResult<Terminal> {
    Terminal::new(t.0, t.1, t.2, t.3).py()
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| to_py(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_dict<T: serde::de::DeserializeOwned>(py: Python<'_>, d: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn quad_config(py: Python<'_>, cfg: Option<&Bound<'_, PyAny>>) -> PyResult<QuadratureConfig> {
    let cfg = match cfg {
        Some(d) => from_dict::<QuadratureConfig>(py, d)?,
        None => QuadratureConfig::default(),
    };
    cfg.validate().py()?;
    Ok(cfg)
}

/// Field at surface point `(x, y)` from a unit-power terminal at `(x0, y0, z0)`.
#[pyfunction]
fn field_amplitude(x0: f64, y0: f64, z0: f64, x: f64, y: f64, lam: f64) -> PyResult<Complex64> {
    let t = Terminal::new(x0, y0, z0, 1.0).py()?;
    fields::field_amplitude(&t, x, y, wavelength(lam)?).py()
}

/// Fraction of radiated power captured by a `[-a, a] x [-b, b]` surface.
/// Pass `x`, `y` for an off-centre terminal.
#[pyfunction]
#[pyo3(signature = (a, b, z, x=0.0, y=0.0))]
fn fraction_nu(a: f64, b: f64, z: f64, x: f64, y: f64) -> PyResult<f64> {
    let s = surface(a, b)?;
    if x == 0.0 && y == 0.0 {
        fields::fraction_nu(&s, z).py()
    } else {
        fields::fraction_nu_at(&s, &Terminal::new(x, y, z, 1.0).py()?).py()
    }
}

/// Signature correlation between two terminals given as `(x, y, z)`.
#[pyfunction]
#[pyo3(signature = (p, q, lam, a=f64::INFINITY, b=f64::INFINITY, quadrature=None))]
fn correlation(
    py: Python<'_>,
    p: (f64, f64, f64),
    q: (f64, f64, f64),
    lam: f64,
    a: f64,
    b: f64,
    quadrature: Option<&Bound<'_, PyAny>>,
) -> PyResult<(Complex64, f64)> {
    let cfg = quad_config(py, quadrature)?;
    let (s, lam) = (surface(a, b)?, wavelength(lam)?);
    let (tp, tq) = (terminal((p.0, p.1, p.2, 1.0))?, terminal((q.0, q.1, q.2, 1.0))?);
    let v = py
        .detach(|| quadrature::correlation_integral(&tp, &tq, &s, lam, &cfg))
        .py()?;
    Ok((v.value, v.est_error))
}

/// `nu * sinc(2 dx / lambda)` for two terminals at height `z` over an
/// unbounded surface.
#[pyfunction]
fn sinc_model(delta_x: f64, z: f64, lam: f64) -> PyResult<f64> {
    quadrature::sinc_model(delta_x, z, wavelength(lam)?).py()
}

/// Numeric correlation against the sinc model on a grid of offsets.
#[pyfunction]
#[pyo3(signature = (z, lam, offsets, quadrature=None))]
fn approximation_audit<'py>(
    py: Python<'py>,
    z: f64,
    lam: f64,
    offsets: Vec<f64>,
    quadrature: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = quad_config(py, quadrature)?;
    let lam = wavelength(lam)?;
    let report = py
        .detach(|| quadrature::approximation_audit(z, lam, &offsets, &cfg))
        .py()?;
    to_dict(py, &report)
}

fn line_config(
    delta_x: f64,
    lam: f64,
    nu: f64,
    n0: f64,
    pbar: Option<f64>,
    power: Option<f64>,
) -> PyResult<LineConfig> {
    let p = match (pbar, power) {
        (Some(p), None) => LinePower::PerMeter(p),
        (None, Some(p)) => LinePower::PerTerminal(p),
        _ => return Err(PyValueError::new_err("give exactly one of pbar or power")),
    };
    LineConfig::new(delta_x, wavelength(lam)?, nu, n0, p).py()
}

/// Optimal and matched-filter capacity of an infinite equi-spaced line.
#[pyfunction]
#[pyo3(signature = (delta_x, lam, nu, n0, pbar=None, power=None))]
fn capacity_1d<'py>(
    py: Python<'py>,
    delta_x: f64,
    lam: f64,
    nu: f64,
    n0: f64,
    pbar: Option<f64>,
    power: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = line_config(delta_x, lam, nu, n0, pbar, power)?;
    to_dict(py, &capacity::LineSweepRow::evaluate(&cfg))
}

/// Matched-filter interference power of an infinite line.
#[pyfunction]
#[pyo3(signature = (delta_x, lam, nu, n0, pbar=None, power=None))]
fn interference_power(
    delta_x: f64,
    lam: f64,
    nu: f64,
    n0: f64,
    pbar: Option<f64>,
    power: Option<f64>,
) -> PyResult<f64> {
    let cfg = line_config(delta_x, lam, nu, n0, pbar, power)?;
    Ok(capacity::interference_power(&cfg))
}

/// Dense-plane capacity per square meter.
#[pyfunction]
fn capacity_2d(lam: f64, pbar: f64, n0: f64) -> PyResult<f64> {
    capacity::capacity_2d(wavelength(lam)?, pbar, n0).py()
}

/// Spatial spectrum of a dense plane at radial frequency `s`; `inf` at the
/// band edge.
#[pyfunction]
fn psd_2d(s: f64, lam: f64) -> PyResult<f64> {
    Ok(match capacity::psd_2d(s, wavelength(lam)?).py()? {
        PsdValue::Finite(v) => v,
        PsdValue::Singular => f64::INFINITY,
    })
}

/// Degrees of freedom per meter of a line at the given `theta`.
#[pyfunction]
fn dims_1d(lam: f64, theta: f64) -> PyResult<f64> {
    capacity::dims_1d(wavelength(lam)?, theta).py()
}

/// Degrees of freedom per square meter of a dense plane.
#[pyfunction]
fn dims_2d(lam: f64) -> PyResult<f64> {
    Ok(capacity::dims_2d(wavelength(lam)?))
}

/// Gram matrix of received signatures.
#[pyclass(name = "GramMatrix", frozen)]
struct PyGram(gram::GramMatrix);

#[pymethods]
impl PyGram {
    /// Build from terminals given as `(x, y, z, power)` tuples.
    #[new]
    #[pyo3(signature = (terminals, lam, a=f64::INFINITY, b=f64::INFINITY, mode="numeric", quadrature=None))]
    fn new(
        py: Python<'_>,
        terminals: Vec<(f64, f64, f64, f64)>,
        lam: f64,
        a: f64,
        b: f64,
        mode: &str,
        quadrature: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let cfg = quad_config(py, quadrature)?;
        let mode: GramMode = mode.parse().py()?;
        let ts = terminals
            .into_iter()
            .map(terminal)
            .collect::<PyResult<Vec<_>>>()?;
        let (s, lam) = (surface(a, b)?, wavelength(lam)?);
        let g = py.detach(|| gram::build_gram(&ts, &s, lam, &cfg, mode)).py()?;
        Ok(PyGram(g))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "GramMatrix(K={}, lambda={}, mode={})",
            self.0.len(),
            self.0.lambda(),
            self.0.mode()
        )
    }

    #[getter]
    fn est_error(&self) -> f64 {
        self.0.est_error()
    }

    /// Entries as a list of rows.
    fn entries(&self) -> Vec<Vec<Complex64>> {
        let e = self.0.entries();
        (0..e.nrows())
            .map(|i| (0..e.ncols()).map(|j| e[(i, j)]).collect())
            .collect()
    }

    /// Eigenvalues in ascending order.
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[pyo3(signature = (threshold=gram::DEFAULT_RANK_THRESHOLD))]
    fn effective_rank(&self, threshold: f64) -> PyResult<usize> {
        Ok(gram::effective_rank(&self.0, threshold, None).py()?.effective_rank)
    }

    /// Sum capacity `log det(I + G / N0)` in nats.
    fn sum_capacity(&self, n0: f64) -> PyResult<f64> {
        let noise = NoiseModel::new(n0).py()?;
        Ok(capacity::sum_capacity_logdet(&self.0, noise, None).total)
    }

    /// Matched-filter capacity of each terminal.
    fn mf_capacities(&self, n0: f64) -> PyResult<Vec<f64>> {
        let noise = NoiseModel::new(n0).py()?;
        capacity::mf_per_user_capacity(&self.0, noise).py()
    }
}

/// Run a Monte-Carlo experiment described by a config dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig = from_dict(py, config)?;
    let res = py.detach(|| experiments::run_experiment(&cfg)).py()?;
    let out = to_dict(py, &res)?;
    out.cast::<PyDict>()?
        .set_item("rows", to_dict(py, &res.rows)?)?;
    Ok(out)
}

/// Parameter set of a named figure preset as a dict.
#[pyfunction]
fn preset<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    match experiments::figure_preset(name).py()? {
        Preset::LineSweep(s) => to_dict(py, &s),
        Preset::MonteCarlo(s) => to_dict(py, &s),
    }
}

#[pymodule]
fn lis(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(field_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(fraction_nu, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(sinc_model, m)?)?;
    m.add_function(wrap_pyfunction!(approximation_audit, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_1d, m)?)?;
    m.add_function(wrap_pyfunction!(interference_power, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_2d, m)?)?;
    m.add_function(wrap_pyfunction!(psd_2d, m)?)?;
    m.add_function(wrap_pyfunction!(dims_1d, m)?)?;
    m.add_function(wrap_pyfunction!(dims_2d, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_class::<PyGram>()?;
    m.add("PRESET_NAMES", experiments::PRESET_NAMES.to_vec())?;
    Ok(())
}
