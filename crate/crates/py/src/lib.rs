//! Python module `emp`.

use std::path::PathBuf;

use emp_core::bounds::{self, LossBoundInputs};
use emp_core::image::{self, Centering, ImageTensor};
use emp_core::net::{self, checkpoint, PruneMode, TrainConfig};
use emp_core::{simplex, EmpDecision, Error, Partition, ScoreVector};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for emp_core::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) if s == "inf" => f64::INFINITY.into_pyobject(py)?.into_any(),
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn score_vector(values: Vec<f64>) -> PyResult<ScoreVector> {
    ScoreVector::new(values).or_py()
}

/// Result of one pruning decision.
#[pyclass(frozen, get_all, module = "emp")]
pub struct Decision {
    n: usize,
    n_eff: usize,
    beta: f64,
    keep_count: usize,
    s_eff: f64,
    mask: Vec<bool>,
    kept_indices: Vec<usize>,
}

impl From<EmpDecision> for Decision {
    fn from(d: EmpDecision) -> Self {
        Self {
            n: d.n,
            n_eff: d.n_eff,
            beta: d.beta,
            keep_count: d.keep_count,
            s_eff: d.s_eff,
            mask: d.mask,
            kept_indices: d.kept_indices,
        }
    }
}

#[pymethods]
impl Decision {
    #[getter]
    fn sparsity(&self) -> f64 {
        1.0 - self.keep_count as f64 / self.n as f64
    }

    fn __repr__(&self) -> String {
        format!(
            "Decision(n={}, n_eff={}, keep_count={}, s_eff={})",
            self.n, self.n_eff, self.keep_count, self.s_eff
        )
    }
}

/// Keep the `floor(beta * N_eff)` largest-magnitude scores.
#[pyfunction]
#[pyo3(signature = (scores, beta = 1.0))]
fn decide(scores: Vec<f64>, beta: f64) -> PyResult<Decision> {
    Ok(emp_core::emp_decide(&score_vector(scores)?, beta).or_py()?.into())
}

/// Per-group decisions; returns a dict with the global mask and every group's decision.
#[pyfunction]
#[pyo3(signature = (scores, groups, beta = 1.0))]
fn decide_partitioned<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    groups: Vec<Vec<usize>>,
    beta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = score_vector(scores)?;
    let p = Partition::new(groups, s.len()).or_py()?;
    let d = emp_core::emp_decide_partitioned(&s, &p, beta).or_py()?;
    let out = serialize(py, &d)?;
    out.set_item("mask", d.global_mask())?;
    out.set_item("kept_indices", d.global_kept_indices())?;
    out.set_item("keep_count", d.keep_count())?;
    out.set_item("sparsity", d.sparsity())?;
    Ok(out)
}

#[pyfunction]
fn effective_number(scores: Vec<f64>) -> PyResult<usize> {
    Ok(emp_core::effective_number(&emp_core::normalize(&score_vector(scores)?).or_py()?))
}

#[pyfunction]
fn keep_count(n_eff: usize, beta: f64, n: usize) -> usize {
    emp_core::keep_count(n_eff, beta, n)
}

/// Elementwise minimum of magnitudes.
#[pyfunction]
fn combine_min(a: Vec<f64>, b: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(emp_core::combine_min(&score_vector(a)?, &score_vector(b)?).or_py()?.into_inner())
}

#[pyfunction]
fn trivial_lower_bound(n: usize, nu: usize) -> PyResult<f64> {
    bounds::trivial_lower_bound(n, nu).or_py()
}

#[pyfunction]
fn tight_lower_bound(n: usize, nu: usize) -> PyResult<f64> {
    bounds::tight_lower_bound(n, nu).or_py()
}

/// Rows `{nu, trivial, tight, gap}` for every nu in 1..=n.
#[pyfunction]
fn bound_sweep(py: Python<'_>, n: usize) -> PyResult<Bound<'_, PyAny>> {
    serialize(py, &bounds::sweep(n).or_py()?)
}

#[pyfunction]
fn lemma_bound(rho: f64, n: usize, trace_h: f64, delta_theta_sq: f64) -> PyResult<f64> {
    bounds::epsilon_bound_lemma(&LossBoundInputs {
        rho,
        n,
        theta_l1: 0.0,
        trace_h,
        delta_theta_sq: Some(delta_theta_sq),
    })
    .or_py()
}

#[pyfunction]
fn asymptotic_bound(rho: f64, n: usize, theta_l1: f64, trace_h: f64) -> PyResult<f64> {
    bounds::epsilon_bound_asymptotic(&LossBoundInputs {
        rho,
        n,
        theta_l1,
        trace_h,
        delta_theta_sq: None,
    })
    .or_py()
}

#[pyfunction]
fn extremal_point(n: usize, nu: usize) -> PyResult<Vec<f64>> {
    Ok(simplex::extremal_point(n, nu).or_py()?.weights().to_vec())
}

/// Mass of the `nu` largest coordinates of a point of the simplex.
#[pyfunction]
fn phi(weights: Vec<f64>, nu: usize) -> PyResult<f64> {
    let w = simplex::OrderedSimplexPoint::from_unsorted(weights).or_py()?;
    simplex::phi(&w, nu).or_py()
}

/// Brute-force check of the closed-form infimum; `nus` defaults to 2..n-1.
#[pyfunction]
#[pyo3(signature = (n, nus = None, budget = simplex::ORACLE_MIN_BUDGET, seed = 0))]
fn verify_proposition(
    py: Python<'_>,
    n: usize,
    nus: Option<Vec<usize>>,
    budget: usize,
    seed: u64,
) -> PyResult<Bound<'_, PyAny>> {
    let nus = nus.unwrap_or_else(|| (2..n).collect());
    let report = py.detach(|| simplex::verify_proposition(n, &nus, budget, seed)).or_py()?;
    let out = serialize(py, &report)?;
    out.set_item("failures", report.failures())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (n, nu, samples, seed = 0))]
fn certify_tight_bound(py: Python<'_>, n: usize, nu: usize, samples: usize, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    let cell = py.detach(|| simplex::certify_tight_bound(n, nu, samples, seed)).or_py()?;
    serialize(py, &cell)
}

/// 8-bit RGB image.
#[pyclass(frozen, skip_from_py_object, module = "emp")]
#[derive(Clone)]
pub struct Image(ImageTensor);

#[pymethods]
impl Image {
    /// From a flat row-major RGB byte buffer.
    #[new]
    fn new(width: usize, height: usize, rgb: Vec<u8>) -> PyResult<Self> {
        Ok(Self(ImageTensor::from_interleaved(width, height, &rgb).or_py()?))
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self(image::read_png(path).or_py()?))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        image::write_png(&self.0, path).or_py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_interleaved()
    }

    fn ssim(&self, other: &Image) -> PyResult<f64> {
        image::ssim(&self.0, &other.0).or_py()
    }

    fn psnr(&self, other: &Image) -> PyResult<f64> {
        image::psnr(&self.0, &other.0).or_py()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

#[pyclass(frozen, get_all, module = "emp")]
pub struct ImagePruneResult {
    pruned: Image,
    masks: Vec<Vec<bool>>,
    sparsity: f64,
    ssim: f64,
    psnr_db: f64,
}

/// Featurewise pruning per channel. `mode` is "global" or "patch";
/// `centering` is "tile" or "channel" and only applies to patch mode.
#[pyfunction]
#[pyo3(signature = (img, beta = 1.0, mode = "global", patch = 4, centering = "tile"))]
fn prune_image(img: &Image, beta: f64, mode: &str, patch: usize, centering: &str) -> PyResult<ImagePruneResult> {
    let centering = match centering {
        "tile" => Centering::Tile,
        "channel" => Centering::Channel,
        other => return Err(PyValueError::new_err(format!("unknown centering {other:?}"))),
    };
    let out = match mode {
        "global" => image::prune_image_global(&img.0, beta),
        "patch" => image::prune_image_patch_with(&img.0, beta, patch, centering),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
    .or_py()?;
    Ok(ImagePruneResult {
        pruned: Image(out.pruned),
        masks: out.masks.to_vec(),
        sparsity: out.sparsity,
        ssim: out.ssim,
        psnr_db: out.psnr_db,
    })
}

/// Labelled feature matrix with a fixed train/test split.
#[pyclass(frozen, module = "emp")]
pub struct Dataset(net::Dataset);

#[pymethods]
impl Dataset {
    #[staticmethod]
    #[pyo3(signature = (per_class = 100, classes = 2, dim = 2, spread = 1.0, seed = 0))]
    fn blobs(per_class: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> PyResult<Self> {
        Ok(Self(net::blobs(per_class, classes, dim, spread, seed).or_py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (per_class = 100, noise = 0.1, seed = 0))]
    fn two_moons(per_class: usize, noise: f64, seed: u64) -> PyResult<Self> {
        Ok(Self(net::two_moons(per_class, noise, seed).or_py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (per_class = 50, noise = 0.1, seed = 0))]
    fn digits(per_class: usize, noise: f64, seed: u64) -> PyResult<Self> {
        Ok(Self(net::digits(per_class, noise, seed).or_py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (images, labels, seed = 0))]
    fn load_idx(images: PathBuf, labels: PathBuf, seed: u64) -> PyResult<Self> {
        Ok(Self(net::load_idx(images, labels, seed).or_py()?))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.0.classes()
    }

    #[getter]
    fn train_size(&self) -> usize {
        self.0.train().len()
    }

    #[getter]
    fn test_size(&self) -> usize {
        self.0.test().len()
    }
}

fn parse_modes(modes: &[String]) -> PyResult<Vec<PruneMode>> {
    modes
        .iter()
        .map(|m| m.parse::<PruneMode>().map_err(|e| PyValueError::new_err(e.to_string())))
        .collect()
}

/// Fully connected ReLU network with a softmax head.
#[pyclass(module = "emp")]
pub struct DenseNet(net::DenseNet);

#[pymethods]
impl DenseNet {
    #[new]
    #[pyo3(signature = (arch, seed = 0))]
    fn new(arch: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(Self(net::DenseNet::new(&arch, seed).or_py()?))
    }

    #[staticmethod]
    fn load(stem: PathBuf) -> PyResult<Self> {
        Ok(Self(checkpoint::load(stem).or_py()?))
    }

    fn save(&self, stem: PathBuf) -> PyResult<()> {
        checkpoint::save(&self.0, stem).or_py()
    }

    #[getter]
    fn arch(&self) -> Vec<usize> {
        self.0.arch()
    }

    #[getter]
    fn weight_count(&self) -> usize {
        self.0.weight_count()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.0.param_count()
    }

    fn weights(&self) -> Vec<f64> {
        self.0.weights_flat()
    }

    fn params(&self) -> Vec<f64> {
        self.0.params_flat()
    }

    fn set_params(&mut self, params: Vec<f64>) -> PyResult<()> {
        self.0.set_params_flat(&params).or_py()
    }

    /// Mini-batch SGD with momentum; returns the per-epoch training loss.
    #[pyo3(signature = (data, epochs = 200, learning_rate = 0.05, batch_size = 32, momentum = 0.9, seed = 0))]
    fn fit(
        &mut self,
        py: Python<'_>,
        data: &Dataset,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
        momentum: f64,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        let cfg = TrainConfig {
            epochs,
            learning_rate,
            batch_size,
            momentum,
            seed,
        };
        let out = py.detach(|| net::train(&self.0, &data.0, &cfg)).or_py()?;
        self.0 = out.net;
        Ok(out.history)
    }

    fn predict(&self, features: Vec<f64>) -> PyResult<usize> {
        let dim = self.0.arch()[0];
        if features.len() != dim {
            return Err(PyValueError::new_err(format!("expected {dim} features, got {}", features.len())));
        }
        Ok(self.0.predict(&features))
    }

    /// Mean cross-entropy on the training split.
    fn loss(&self, data: &Dataset) -> PyResult<f64> {
        self.0.loss(&data.0, data.0.train()).or_py()
    }

    /// Accuracy on the test split, or on the training split when there is no test split.
    fn accuracy(&self, data: &Dataset) -> PyResult<f64> {
        let idx = if data.0.test().is_empty() { data.0.train() } else { data.0.test() };
        self.0.accuracy(&data.0, idx).or_py()
    }

    /// Hutchinson estimate of Tr(H) over the weights; returns (mean, std_error).
    #[pyo3(signature = (data, probes = 50, seed = 0))]
    fn trace_h(&self, py: Python<'_>, data: &Dataset, probes: usize, seed: u64) -> PyResult<(f64, f64)> {
        let est = py.detach(|| net::estimate_trace_h(&self.0, &data.0, probes, seed)).or_py()?;
        Ok((est.mean, est.std_error))
    }

    /// Prunes a copy of the network at every beta and mode; one dict per cell.
    #[pyo3(signature = (data, betas, modes = vec!["global".to_string(), "block".to_string()], trace_h = None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        data: &Dataset,
        betas: Vec<f64>,
        modes: Vec<String>,
        trace_h: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let modes = parse_modes(&modes)?;
        let rows = py.detach(|| net::beta_sweep(&self.0, &data.0, &betas, &modes, trace_h)).or_py()?;
        serialize(py, &rows)
    }

    fn __repr__(&self) -> String {
        format!("DenseNet(arch={:?})", self.0.arch())
    }
}

#[pymodule]
fn emp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Decision>()?;
    m.add_class::<Image>()?;
    m.add_class::<ImagePruneResult>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<DenseNet>()?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(decide_partitioned, m)?)?;
    m.add_function(wrap_pyfunction!(effective_number, m)?)?;
    m.add_function(wrap_pyfunction!(keep_count, m)?)?;
    m.add_function(wrap_pyfunction!(combine_min, m)?)?;
    m.add_function(wrap_pyfunction!(trivial_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(tight_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bound_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_bound, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(extremal_point, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(verify_proposition, m)?)?;
    m.add_function(wrap_pyfunction!(certify_tight_bound, m)?)?;
    m.add_function(wrap_pyfunction!(prune_image, m)?)?;
    Ok(())
}
