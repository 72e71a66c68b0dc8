//! Python bindings: maps, networks, training, FTLE, SVD geometry and bounds.

use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use geochaos::bounds::{bounds_table as core_bounds_table, expand_cubic};
use geochaos::dataset::{generate_pool as core_generate_pool, InitBox, Pairs, PoolSpec};
use geochaos::dynamics::{iterate, DiscreteMap, HenonMap, HenonParams, L63Map, L63Params, DEFAULT_DIVERGENCE_GUARD};
use geochaos::ftle::{fd_jacobian, max_ftle as core_max_ftle, max_ftle_tangent, DEFAULT_EPS};
use geochaos::geometry::{classify_orthogonal_2d as core_classify, stretch_count, svd_wstar as core_svd_wstar};
use geochaos::network::bundled;
use geochaos::training::{train_with_validation, ArchSpec, TrainConfig};
use geochaos::{Activation, Mlp};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(value_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

#[pyclass(name = "L63Map", frozen)]
struct PyL63 {
    inner: L63Map,
}

#[pymethods]
impl PyL63 {
    #[new]
    #[pyo3(signature = (sigma=10.0, rho=28.0, beta=8.0 / 3.0, dt=0.01))]
    fn new(sigma: f64, rho: f64, beta: f64, dt: f64) -> Self {
        Self {
            inner: L63Map::new(L63Params { sigma, rho, beta, dt }),
        }
    }

    fn step(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim(&self.inner, &state)?;
        Ok(self.inner.apply(&state))
    }

    fn trajectory(&self, state: Vec<f64>, n_steps: usize) -> PyResult<Vec<Vec<f64>>> {
        orbit(&self.inner, &state, n_steps)
    }

    /// Central-difference Jacobian of `n_steps` map applications.
    #[pyo3(signature = (state, n_steps=1, eps=DEFAULT_EPS))]
    fn jacobian(&self, state: Vec<f64>, n_steps: usize, eps: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&fd_jacobian(&self.inner, &state, n_steps, eps).map_err(value_err)?))
    }
}

#[pyclass(name = "HenonMap", frozen)]
struct PyHenon {
    inner: HenonMap,
}

#[pymethods]
impl PyHenon {
    #[new]
    #[pyo3(signature = (a=1.4, b=0.3))]
    fn new(a: f64, b: f64) -> Self {
        Self {
            inner: HenonMap::new(HenonParams { a, b }),
        }
    }

    fn step(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim(&self.inner, &state)?;
        Ok(self.inner.apply(&state))
    }

    fn trajectory(&self, state: Vec<f64>, n_steps: usize) -> PyResult<Vec<Vec<f64>>> {
        orbit(&self.inner, &state, n_steps)
    }

    #[pyo3(signature = (state, n_steps=1, eps=DEFAULT_EPS))]
    fn jacobian(&self, state: Vec<f64>, n_steps: usize, eps: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&fd_jacobian(&self.inner, &state, n_steps, eps).map_err(value_err)?))
    }
}

#[pyclass(name = "Mlp", frozen)]
struct PyMlp {
    inner: Mlp,
}

#[pymethods]
impl PyMlp {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Mlp::from_json(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Mlp::load(&path).map_err(value_err)?,
        })
    }

    /// `table1`, `table1-printed` or `table2`.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let inner = match name {
            "table1" => bundled::table1(),
            "table1-printed" => bundled::table1_printed(),
            "table2" => bundled::table2(),
            other => return Err(value_err(format!("unknown bundled model `{other}`"))),
        };
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(runtime_err)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    #[getter]
    fn hidden_widths(&self) -> Vec<usize> {
        self.inner.hidden_widths()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    #[getter]
    fn activation(&self) -> &'static str {
        self.inner.activation().name()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim(&self.inner, &x)?;
        Ok(self.inner.forward(&x).iter().copied().collect())
    }

    fn jacobian(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        check_dim(&self.inner, &x)?;
        Ok(rows(&self.inner.jacobian(&x)))
    }

    fn trajectory(&self, x: Vec<f64>, n_steps: usize) -> PyResult<Vec<Vec<f64>>> {
        orbit(&self.inner, &x, n_steps)
    }

    /// `(W*, b*)` of the neuron map.
    fn effective_pair(&self) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
        let e = self.inner.effective_pair().map_err(value_err)?;
        Ok((rows(&e.wstar), e.bstar.iter().copied().collect()))
    }

    fn neuron_step(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let y = nalgebra::DVector::from_vec(y);
        Ok(self.inner.neuron_step(&y).map_err(value_err)?.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Mlp({} -> {:?} -> {}, {})",
            self.inner.input_dim(),
            self.inner.hidden_widths(),
            self.inner.output_dim(),
            self.inner.activation().name()
        )
    }
}

fn check_dim<M: DiscreteMap + ?Sized>(map: &M, x: &[f64]) -> PyResult<()> {
    if x.len() != map.dim() {
        return Err(value_err(format!("state has {} coordinates, map expects {}", x.len(), map.dim())));
    }
    Ok(())
}

fn orbit<M: DiscreteMap + ?Sized>(map: &M, x: &[f64], n: usize) -> PyResult<Vec<Vec<f64>>> {
    let t = iterate(map, x, n, DEFAULT_DIVERGENCE_GUARD).map_err(runtime_err)?;
    Ok(t.points().map(<[f64]>::to_vec).collect())
}

/// Any of the three map classes.
enum AnyMap {
    L63(L63Map),
    Henon(HenonMap),
    Net(Mlp),
}

impl AnyMap {
    fn extract(obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(m) = obj.cast::<PyL63>() {
            return Ok(AnyMap::L63(m.get().inner));
        }
        if let Ok(m) = obj.cast::<PyHenon>() {
            return Ok(AnyMap::Henon(m.get().inner));
        }
        if let Ok(m) = obj.cast::<PyMlp>() {
            return Ok(AnyMap::Net(m.get().inner.clone()));
        }
        Err(value_err("expected an L63Map, HenonMap or Mlp"))
    }

    fn as_map(&self) -> &dyn DiscreteMap {
        match self {
            AnyMap::L63(m) => m,
            AnyMap::Henon(m) => m,
            AnyMap::Net(m) => m,
        }
    }
}

/// Attractor pairs `(inputs, outputs)` from `n_traj` random starts.
#[pyfunction]
#[pyo3(signature = (map, n_traj=1000, n_steps=2500, n_discard=2000, seed=0, init_lower=None, init_upper=None))]
#[allow(clippy::too_many_arguments)]
fn generate_pool(
    py: Python<'_>,
    map: &Bound<'_, PyAny>,
    n_traj: usize,
    n_steps: usize,
    n_discard: usize,
    seed: u64,
    init_lower: Option<Vec<f64>>,
    init_upper: Option<Vec<f64>>,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let map = AnyMap::extract(map)?;
    let default_box = match map {
        AnyMap::Henon(_) => InitBox::henon(),
        _ => InitBox::l63(),
    };
    let init_box = match (init_lower, init_upper) {
        (Some(l), Some(u)) => InitBox::new(l, u),
        (None, None) => default_box,
        _ => return Err(value_err("give both init_lower and init_upper or neither")),
    };
    let spec = PoolSpec {
        n_traj,
        n_steps,
        n_discard,
        init_box,
        guard: DEFAULT_DIVERGENCE_GUARD,
    };
    let pool = py
        .detach(|| core_generate_pool(map.as_map(), &spec, seed))
        .map_err(value_err)?;
    let p = &pool.pairs;
    Ok((
        (0..p.len()).map(|i| p.input(i).to_vec()).collect(),
        (0..p.len()).map(|i| p.output(i).to_vec()).collect(),
    ))
}

fn pairs(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> PyResult<Pairs> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(value_err("inputs and outputs must be non-empty and equally long"));
    }
    let dim = inputs[0].len();
    let mut p = Pairs::new(dim);
    for (x, y) in inputs.iter().zip(outputs) {
        if x.len() != dim || y.len() != dim {
            return Err(value_err("every pair must have the same dimension"));
        }
        p.push(x, y);
    }
    Ok(p)
}

/// Trains a single-hidden-layer net with Bayesian-regularized
/// Levenberg-Marquardt. Returns `(net, report)`.
#[pyfunction]
#[pyo3(signature = (inputs, outputs, neurons, activation="tanh", epochs=1000, restarts=5, seed=0, bayesian=true, val_inputs=None, val_outputs=None))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    neurons: usize,
    activation: &str,
    epochs: usize,
    restarts: usize,
    seed: u64,
    bayesian: bool,
    val_inputs: Option<Vec<Vec<f64>>>,
    val_outputs: Option<Vec<Vec<f64>>>,
) -> PyResult<(PyMlp, Bound<'py, PyAny>)> {
    let data = pairs(&inputs, &outputs)?;
    let validation = match (val_inputs, val_outputs) {
        (Some(x), Some(y)) => Some(pairs(&x, &y)?),
        (None, None) => None,
        _ => return Err(value_err("give both val_inputs and val_outputs or neither")),
    };
    let act: Activation = activation.parse().map_err(value_err)?;
    let arch = ArchSpec::single(data.dim(), neurons, act);
    let cfg = TrainConfig {
        epochs,
        restarts,
        seed,
        bayesian,
        ..TrainConfig::default()
    };
    let (net, report) = py
        .detach(|| train_with_validation(&arch, &data, validation.as_ref(), &cfg))
        .map_err(runtime_err)?;
    let mut summary = serde_json::to_value(&report).map_err(runtime_err)?;
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("trace");
        obj.insert("epochs_run".into(), report.trace.len().into());
    }
    Ok((PyMlp { inner: net }, json_to_py(py, &summary)?))
}

/// Largest finite-time Lyapunov exponent over `n_steps` steps of length `dt`.
///
/// `tangent=True` propagates the analytic Jacobian with renormalization, which
/// stays accurate over long horizons; it needs a HenonMap or Mlp.
#[pyfunction]
#[pyo3(signature = (map, x0, n_steps, dt=None, tangent=false))]
fn max_ftle(map: &Bound<'_, PyAny>, x0: Vec<f64>, n_steps: usize, dt: Option<f64>, tangent: bool) -> PyResult<f64> {
    let map = AnyMap::extract(map)?;
    let dt = dt.unwrap_or(match &map {
        AnyMap::Henon(_) => 1.0,
        AnyMap::L63(m) => m.params.dt,
        AnyMap::Net(_) => 0.01,
    });
    let rec = match (&map, tangent) {
        (_, false) => core_max_ftle(map.as_map(), &x0, n_steps, dt),
        (AnyMap::Henon(m), true) => max_ftle_tangent(m, &x0, n_steps, dt),
        (AnyMap::Net(m), true) => max_ftle_tangent(m, &x0, n_steps, dt),
        (AnyMap::L63(_), true) => return Err(value_err("L63Map has no analytic Jacobian; use tangent=False")),
    };
    Ok(rec.map_err(runtime_err)?.lambda_max)
}

/// `(U, s, V)` of the net's `W*` with the library's sign convention.
#[pyfunction]
fn svd_wstar(net: &PyMlp) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let t = core_svd_wstar(&net.inner).map_err(value_err)?;
    Ok((rows(&t.u), t.s.iter().copied().collect(), rows(&t.v)))
}

/// Number of singular values of `W*` at or above `threshold`.
#[pyfunction]
#[pyo3(signature = (net, threshold=1.0))]
fn stretch_directions(net: &PyMlp, threshold: f64) -> PyResult<usize> {
    let t = core_svd_wstar(&net.inner).map_err(value_err)?;
    Ok(stretch_count(&t.s, threshold))
}

/// Rotation or reflection of a 2x2 orthogonal matrix, as a dict.
#[pyfunction]
fn classify_orthogonal_2d<'py>(py: Python<'py>, q: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    let c = core_classify(&matrix(&q)?).map_err(value_err)?;
    json_to_py(py, &serde_json::to_value(c).map_err(runtime_err)?)
}

/// The neuron-count bounds for `n` inputs and degree `d`, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (n=3, d=2, eps=1.0))]
fn bounds_table<'py>(py: Python<'py>, n: u32, d: u32, eps: f64) -> PyResult<Bound<'py, PyAny>> {
    let t = core_bounds_table(n, d, eps).map_err(value_err)?;
    json_to_py(py, &serde_json::to_value(t).map_err(runtime_err)?)
}

/// Cubic Taylor polynomial of the net evaluated at `x`.
#[pyfunction]
fn cubic_expansion_eval(net: &PyMlp, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = expand_cubic(&net.inner).map_err(value_err)?;
    if x.len() != p.n_inputs {
        return Err(value_err("wrong input dimension"));
    }
    Ok(p.eval(&x).iter().copied().collect())
}

#[pymodule]
fn geochaos_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyL63>()?;
    m.add_class::<PyHenon>()?;
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(generate_pool, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(max_ftle, m)?)?;
    m.add_function(wrap_pyfunction!(svd_wstar, m)?)?;
    m.add_function(wrap_pyfunction!(stretch_directions, m)?)?;
    m.add_function(wrap_pyfunction!(classify_orthogonal_2d, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_table, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_expansion_eval, m)?)?;
    Ok(())
}
