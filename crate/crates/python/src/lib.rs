//! Python bindings. Fields cross the boundary as lists of rows.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gmse_core::trainkit::{ComparisonReport, TrainLog};
use gmse_core::{Dataset, Error, Field, FlowCondition, GmseParams, LossKind, Schedule, SsimParams, TrainConfig, WeightMap};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Format { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for gmse_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A 2D grid of finite values.
#[pyclass(name = "Field", module = "gmse", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: Field,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(PyValueError::new_err("rows must all have the same length"));
        }
        let values = rows.into_iter().flatten().collect();
        Ok(PyField {
            inner: Field::new(height, width, values).py()?,
        })
    }

    #[staticmethod]
    fn filled(height: usize, width: usize, value: f64) -> PyResult<Self> {
        Ok(PyField {
            inner: Field::filled(height, width, value).py()?,
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let format = gmse_core::FieldFormat::from_path(&path);
        Ok(PyField {
            inner: gmse_core::read_field(&path, format).py()?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let format = gmse_core::FieldFormat::from_path(&path);
        gmse_core::write_field(&self.inner, &path, format).py()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        (0..self.inner.height()).map(|r| self.inner.row(r).to_vec()).collect()
    }

    fn min(&self) -> f64 {
        self.inner.min()
    }

    fn max(&self) -> f64 {
        self.inner.max()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __getitem__(&self, index: (usize, usize)) -> PyResult<f64> {
        let (h, w) = self.inner.shape();
        if index.0 >= h || index.1 >= w {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("{index:?} outside {h}x{w}")));
        }
        Ok(self.inner.get(index.0, index.1))
    }

    fn __eq__(&self, other: &PyField) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let (h, w) = self.inner.shape();
        format!("Field({h}x{w}, min={}, max={})", self.inner.min(), self.inner.max())
    }
}

fn params(sigma: f64, gamma: f64, offset: f64) -> PyResult<GmseParams> {
    GmseParams::new(sigma, gamma, offset).py()
}

fn wrap(inner: Field) -> PyField {
    PyField { inner }
}

fn weights_of(weights: &PyField) -> PyResult<WeightMap> {
    WeightMap::new(weights.inner.clone(), weights.inner.min().clamp(0.0, 1.0)).py()
}

/// Gradient weight map of `reference`, values in `[offset, 1]`.
#[pyfunction]
#[pyo3(signature = (reference, sigma = 10.0, gamma = 1.0, offset = 0.2))]
fn weight_map(reference: &PyField, sigma: f64, gamma: f64, offset: f64) -> PyResult<PyField> {
    let map = gmse_core::build_weight_map(&reference.inner, &params(sigma, gamma, offset)?).py()?;
    Ok(wrap(map.into_field()))
}

#[pyfunction]
fn mse(real: &PyField, fake: &PyField) -> PyResult<f64> {
    Ok(gmse_core::mse(&real.inner, &fake.inner).py()?.get())
}

/// GMSE with the weight map built from `real`.
#[pyfunction]
#[pyo3(name = "gmse", signature = (real, fake, sigma = 10.0, gamma = 1.0, offset = 0.2))]
fn gmse_loss(real: &PyField, fake: &PyField, sigma: f64, gamma: f64, offset: f64) -> PyResult<f64> {
    let map = gmse_core::build_weight_map(&real.inner, &params(sigma, gamma, offset)?).py()?;
    Ok(gmse_core::gmse(&real.inner, &fake.inner, &map).py()?.get())
}

/// GMSE against an explicit weight field with values in `[0, 1]`.
#[pyfunction]
fn gmse_weighted(real: &PyField, fake: &PyField, weights: &PyField) -> PyResult<f64> {
    Ok(gmse_core::gmse(&real.inner, &fake.inner, &weights_of(weights)?).py()?.get())
}

/// Gradient of the weighted loss with respect to `fake`.
#[pyfunction]
fn gmse_gradient(real: &PyField, fake: &PyField, weights: &PyField) -> PyResult<PyField> {
    Ok(wrap(gmse_core::gmse_gradient(&real.inner, &fake.inner, &weights_of(weights)?).py()?))
}

#[pyfunction]
fn mse_gradient(real: &PyField, fake: &PyField) -> PyResult<PyField> {
    Ok(wrap(gmse_core::mse_gradient(&real.inner, &fake.inner).py()?))
}

#[pyfunction]
#[pyo3(signature = (a, b, dynamic_range = 1.0, k1 = 0.01, k2 = 0.03, windowed = false))]
fn ssim(a: &PyField, b: &PyField, dynamic_range: f64, k1: f64, k2: f64, windowed: bool) -> PyResult<f64> {
    let p = SsimParams::new(dynamic_range, k1, k2).py()?;
    if windowed {
        gmse_core::ssim_windowed(&a.inner, &b.inner, &p).py()
    } else {
        gmse_core::ssim_global(&a.inner, &b.inner, &p).py()
    }
}

#[pyfunction]
fn normalize_curve(values: Vec<f64>) -> PyResult<Vec<f64>> {
    let curve = gmse_core::LossCurve::new(values).py()?;
    Ok(gmse_core::normalize_curve(&curve).py()?.values().to_vec())
}

#[pyfunction]
fn max_loss_rate(values: Vec<f64>) -> PyResult<f64> {
    gmse_core::max_loss_rate(&gmse_core::LossCurve::new(values).py()?).py()
}

fn stage_tuples(s: &Schedule) -> Vec<(usize, f64, f64, f64)> {
    s.stages().iter().map(|(e, p)| (*e, p.sigma(), p.gamma(), p.offset())).collect()
}

/// Built-in dynamic schedule as `(start_epoch, sigma, gamma, offset)` stages.
#[pyfunction]
fn paper_dgmse() -> Vec<(usize, f64, f64, f64)> {
    stage_tuples(&gmse_core::paper_dgmse())
}

/// Parameters in force at a 0-based `epoch`; `schedule` is schedule text or
/// `None` for the built-in one.
#[pyfunction]
#[pyo3(signature = (epoch, schedule = None))]
fn resolve_schedule(epoch: usize, schedule: Option<&str>) -> PyResult<(f64, f64, f64)> {
    let s = parse_schedule(schedule)?;
    let p = s.resolve(epoch);
    Ok((p.sigma(), p.gamma(), p.offset()))
}

fn parse_schedule(text: Option<&str>) -> PyResult<Schedule> {
    match text {
        Some(t) => t.parse().py(),
        None => Ok(gmse_core::paper_dgmse()),
    }
}

#[pyfunction]
#[pyo3(signature = (height, width, speed, angle, seed = 0))]
fn make_wake_field(height: usize, width: usize, speed: f64, angle: f64, seed: u64) -> PyResult<PyField> {
    let cond = FlowCondition::new(speed, angle).py()?;
    Ok(wrap(gmse_core::make_wake_field(height, width, cond, seed).py()?))
}

/// Seeded synthetic wake dataset.
#[pyclass(name = "Dataset", module = "gmse", frozen)]
pub struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (n, height = 64, width = 64, seed = 0))]
    fn synthetic(n: usize, height: usize, width: usize, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: gmse_core::make_dataset(n, height, width, seed).py()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, seed = 0))]
    fn read_dir(path: PathBuf, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: Dataset::read_dir(path, seed).py()?,
        })
    }

    fn write_dir(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_dir(path).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    /// `(speed, angle, field)` of item `index`.
    fn item(&self, index: usize) -> PyResult<(f64, f64, PyField)> {
        let item = self
            .inner
            .items()
            .get(index)
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(format!("item {index} of {}", self.inner.len())))?;
        Ok((item.condition.speed(), item.condition.angle(), wrap(item.field.clone())))
    }
}

fn loss_kind(spec: &str, schedule: Option<&str>) -> PyResult<LossKind> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["mse"] => Ok(LossKind::Mse),
        ["gmse"] => Ok(LossKind::gmse_baseline()),
        ["dgmse"] => Ok(LossKind::Dgmse(parse_schedule(schedule)?)),
        ["gmse", s, g, c] => {
            let num = |v: &str| v.parse::<f64>().map_err(|_| PyValueError::new_err(format!("bad number {v:?}")));
            Ok(LossKind::Gmse(params(num(s)?, num(g)?, num(c)?)?))
        }
        _ => Err(PyValueError::new_err(format!(
            "unknown loss {spec:?}; expected mse, gmse, dgmse or gmse:SIGMA:GAMMA:OFFSET"
        ))),
    }
}

fn log_dict<'py>(py: Python<'py>, log: &TrainLog) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", &log.config.label)?;
    d.set_item("loss", log.loss.values().to_vec())?;
    d.set_item("ssim", log.ssim.clone())?;
    d.set_item("max_loss_rate", log.max_loss_rate().py()?)?;
    Ok(d)
}

fn config(loss: LossKind, epochs: usize, seed: u64, lr: Option<f64>, threads: usize) -> TrainConfig {
    let mut c = TrainConfig::new(loss, epochs, seed);
    if let Some(lr) = lr {
        c.lr = lr;
    }
    c.threads = threads;
    c
}

/// Trains the generator; returns `{label, loss, ssim, max_loss_rate}`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (dataset, loss = "mse", epochs = 100, seed = 0, lr = None, schedule = None, threads = 1))]
fn train<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    loss: &str,
    epochs: usize,
    seed: u64,
    lr: Option<f64>,
    schedule: Option<&str>,
    threads: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let c = config(loss_kind(loss, schedule)?, epochs, seed, lr, threads).with_label(loss);
    let log = py.detach(|| gmse_core::train(&dataset.inner, &c)).py()?;
    log_dict(py, &log)
}

/// Trains every loss spec on the same data; returns the comparison table
/// as CSV text plus the per-run logs.
#[pyfunction]
#[pyo3(signature = (dataset, losses, epochs = 100, seed = 0, lr = None, threads = 1))]
fn compare<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    losses: Vec<String>,
    epochs: usize,
    seed: u64,
    lr: Option<f64>,
    threads: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let configs = losses
        .iter()
        .map(|l| Ok(config(loss_kind(l, None)?, epochs, seed, lr, threads).with_label(l.as_str())))
        .collect::<PyResult<Vec<_>>>()?;
    let report: ComparisonReport = py.detach(|| gmse_core::compare(&dataset.inner, &configs)).py()?;
    let d = PyDict::new(py);
    d.set_item("csv", report.to_csv())?;
    d.set_item("svg", report.to_svg())?;
    d.set_item("runs", report.logs.iter().map(|l| log_dict(py, l)).collect::<PyResult<Vec<_>>>()?)?;
    Ok(d)
}

#[pymodule]
fn gmse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(weight_map, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(gmse_loss, m)?)?;
    m.add_function(wrap_pyfunction!(gmse_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(gmse_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(mse_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_curve, m)?)?;
    m.add_function(wrap_pyfunction!(max_loss_rate, m)?)?;
    m.add_function(wrap_pyfunction!(paper_dgmse, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(make_wake_field, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
