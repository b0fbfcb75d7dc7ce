//! Python bindings for `pauliprop`.

use pauliprop::channels::{upsilon, ContractionModel, Design};
use pauliprop::schema::{circuit_from_json, circuit_to_json};
use pauliprop::{
    ChannelClass, Circuit, EnsembleSpec, Error, Functional, Lattice, NoiseModel, NoisePlacement, NormalFormChannel,
    TruncationConfig,
};
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::TooLarge { .. } | Error::TermLimit(_) => PyMemoryError::new_err(e.to_string()),
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for pauliprop::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "PauliString", module = "pauliprop_py", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPauliString(pauliprop::PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(label: &str) -> PyResult<Self> {
        label.parse().map(Self).map_err(to_py)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn commutes(&self, other: &Self) -> PyResult<bool> {
        self.0.commutes(&other.0).py()
    }

    /// Returns `(m, R)` with `self * other = i^m R`.
    fn multiply(&self, other: &Self) -> PyResult<(u8, Self)> {
        let (r, m) = self.0.multiply(&other.0).py()?;
        Ok((m, Self(r)))
    }

    fn __str__(&self) -> String {
        self.0.to_label()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0.to_label())
    }
}

#[pyclass(name = "PauliSum", module = "pauliprop_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPauliSum(pauliprop::PauliSum);

#[pymethods]
impl PyPauliSum {
    /// From `[(label, coeff), ...]`.
    #[new]
    fn new(terms: Vec<(String, f64)>) -> PyResult<Self> {
        let refs: Vec<(&str, f64)> = terms.iter().map(|(l, c)| (l.as_str(), *c)).collect();
        pauliprop::PauliSum::from_labels(&refs).map(Self).map_err(to_py)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Terms sorted by label.
    fn terms(&self) -> Vec<(String, f64)> {
        self.0
            .sorted_terms()
            .into_iter()
            .map(|(p, a)| (p.to_label(), a))
            .collect()
    }

    fn coeff(&self, label: &str) -> PyResult<f64> {
        let p: pauliprop::PauliString = label.parse().map_err(to_py)?;
        Ok(self.0.coeff(&p))
    }

    fn frobenius_norm_sq(&self) -> f64 {
        self.0.frobenius_norm_sq()
    }

    fn expectation(&self, state: &PyProductState) -> PyResult<f64> {
        self.0.expectation_product_state(&state.0).py()
    }

    fn __repr__(&self) -> String {
        format!("PauliSum({:?})", self.terms())
    }
}

#[pyclass(name = "ProductState", module = "pauliprop_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProductState(pauliprop::ProductState);

#[pymethods]
impl PyProductState {
    /// From one Bloch vector per qubit.
    #[new]
    fn new(bloch: Vec<[f64; 3]>) -> PyResult<Self> {
        pauliprop::ProductState::new(bloch).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn zeros(n: usize) -> Self {
        Self(pauliprop::ProductState::zeros(n))
    }

    fn bloch(&self) -> Vec<[f64; 3]> {
        self.0.bloch().to_vec()
    }
}

#[pyclass(name = "Channel", module = "pauliprop_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel(NormalFormChannel);

#[pymethods]
impl PyChannel {
    #[staticmethod]
    fn amplitude_damping(gamma: f64) -> PyResult<Self> {
        NormalFormChannel::amplitude_damping(gamma).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn dephasing(p: f64) -> PyResult<Self> {
        NormalFormChannel::dephasing(p).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn depolarizing(p: f64) -> PyResult<Self> {
        NormalFormChannel::depolarizing(p).map(Self).map_err(to_py)
    }

    /// Normal form `(D, t)` with no pre or post rotation.
    #[staticmethod]
    fn custom(d: [f64; 3], t: [f64; 3]) -> PyResult<Self> {
        NormalFormChannel::new(d, t).map(Self).map_err(to_py)
    }

    #[getter]
    fn d(&self) -> [f64; 3] {
        self.0.d()
    }

    #[getter]
    fn t(&self) -> [f64; 3] {
        self.0.t()
    }

    fn classify(&self) -> &'static str {
        match self.0.classify() {
            ChannelClass::Unitary => "unitary",
            ChannelClass::DepolarizingLike => "depolarizing_like",
            ChannelClass::DephasingLike => "dephasing_like",
            ChannelClass::NonUnital => "non_unital",
        }
    }

    fn upsilon(&self) -> f64 {
        upsilon(self.0.d(), self.0.t())
    }

    fn chi_sq_worstcase(&self) -> f64 {
        self.0.chi_sq_worstcase()
    }

    /// Mean contraction under a 2-design, or an `eta`-scrambler when given.
    #[pyo3(signature = (eta=None))]
    fn chi_sq_mean(&self, eta: Option<f64>) -> PyResult<f64> {
        self.0.chi_sq_mean(design(eta)).py()
    }

    /// Worst-case rate unless `eta` or `two_design` selects a mean model.
    #[pyo3(signature = (two_design=false, eta=None))]
    fn effective_depolarizing_rate(&self, two_design: bool, eta: Option<f64>) -> PyResult<f64> {
        let model = if two_design || eta.is_some() {
            ContractionModel::Mean(design(eta))
        } else {
            ContractionModel::WorstCase
        };
        self.0.effective_depolarizing_rate(model).py()
    }

    fn __repr__(&self) -> String {
        format!("Channel(D={:?}, t={:?})", self.0.d(), self.0.t())
    }
}

fn design(eta: Option<f64>) -> Design {
    eta.map_or(Design::TwoDesign, Design::Scrambler)
}

fn placement(name: &str) -> PyResult<NoisePlacement> {
    match name {
        "every_layer" => Ok(NoisePlacement::EveryLayer),
        "every_step" => Ok(NoisePlacement::EveryStep),
        other => Err(PyValueError::new_err(format!("unknown placement {other:?}"))),
    }
}

fn uniform_noise(channel: Option<&PyChannel>) -> NoiseModel {
    channel.map_or(NoiseModel::None, |c| NoiseModel::Uniform(c.0.clone()))
}

#[pyclass(name = "Circuit", module = "pauliprop_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit(Circuit);

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        circuit_from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        circuit_to_json(&self.0).py()
    }

    /// Hamiltonian-variational template on a square lattice with uniform angles.
    #[staticmethod]
    #[pyo3(signature = (rows, cols, blocks, noise=None, periodic=true, placement="every_step"))]
    fn hva(
        rows: usize,
        cols: usize,
        blocks: usize,
        noise: Option<&PyChannel>,
        periodic: bool,
        placement: &str,
    ) -> PyResult<Self> {
        let lat = Lattice::Square { rows, cols, periodic };
        pauliprop::build_hva(
            &lat,
            &uniform_noise(noise),
            &EnsembleSpec::uniform(0),
            blocks,
            self::placement(placement)?,
        )
        .map(Self)
        .map_err(to_py)
    }

    /// Second-order Trotter circuit for the transverse-field Ising model.
    #[staticmethod]
    #[pyo3(signature = (rows, cols, j, h, dt, steps, noise=None, periodic=true))]
    #[allow(clippy::too_many_arguments)]
    fn trotter_tfim(
        rows: usize,
        cols: usize,
        j: f64,
        h: f64,
        dt: f64,
        steps: usize,
        noise: Option<&PyChannel>,
        periodic: bool,
    ) -> PyResult<Self> {
        let lat = Lattice::Square { rows, cols, periodic };
        pauliprop::build_trotter_tfim(&lat, j, h, dt, steps, &uniform_noise(noise), NoisePlacement::EveryStep)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn is_concrete(&self) -> bool {
        self.0.is_concrete()
    }

    /// Draws every random angle and Clifford.
    fn sample(&self, seed: u64) -> Self {
        Self(pauliprop::sample_circuit(&self.0, seed))
    }
}

/// Truncated Heisenberg evolution. Returns `(terms, stats)`.
#[pyfunction]
#[pyo3(signature = (circuit, observable, k=None, coeff_cutoff=0.0, max_terms=None))]
fn backpropagate<'py>(
    py: Python<'py>,
    circuit: &PyCircuit,
    observable: &PyPauliSum,
    k: Option<usize>,
    coeff_cutoff: f64,
    max_terms: Option<usize>,
) -> PyResult<(PyPauliSum, Bound<'py, PyDict>)> {
    let trunc = TruncationConfig {
        k,
        coeff_cutoff,
        max_terms,
        ..TruncationConfig::default()
    };
    let r = py
        .detach(|| pauliprop::backpropagate(&circuit.0, &observable.0, &trunc))
        .py()?;
    let stats = PyDict::new(py);
    let s = &r.stats;
    stats.set_item("paths_discarded_by_weight", s.paths_discarded_by_weight)?;
    stats.set_item("paths_discarded_by_coeff", s.paths_discarded_by_coeff)?;
    stats.set_item("paths_discarded_by_xy", s.paths_discarded_by_xy)?;
    stats.set_item("paths_discarded_by_current_weight", s.paths_discarded_by_current_weight)?;
    stats.set_item("peak_term_count", s.peak_term_count)?;
    stats.set_item("surviving_path_count", s.surviving_path_count)?;
    Ok((PyPauliSum(r.terms), stats))
}

/// Dense density-matrix reference value of `tr(O C(rho))`.
#[pyfunction]
fn simulate_exact(py: Python<'_>, circuit: &PyCircuit, state: &PyProductState, observable: &PyPauliSum) -> PyResult<f64> {
    py.detach(|| pauliprop::simulate_exact(&circuit.0, &state.0, &observable.0))
        .py()
}

/// Monte Carlo estimate of `variance`, `trunc_mse` or `trunc_frobenius`.
/// Returns `(mean, standard_error)`.
#[pyfunction]
#[pyo3(signature = (template, observable, functional, samples, seed, k=None, state=None))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    py: Python<'_>,
    template: &PyCircuit,
    observable: &PyPauliSum,
    functional: &str,
    samples: u64,
    seed: u64,
    k: Option<usize>,
    state: Option<&PyProductState>,
) -> PyResult<(f64, f64)> {
    let n = template.0.num_qubits();
    let state = state.map_or_else(|| pauliprop::ProductState::zeros(n), |s| s.0.clone());
    let need_k = || k.ok_or_else(|| PyValueError::new_err("truncated functionals need k"));
    let f = match functional {
        "variance" => Functional::Variance { state },
        "trunc_mse" => Functional::TruncMse { k: need_k()?, state },
        "trunc_frobenius" => Functional::TruncFrobenius { k: need_k()? },
        other => return Err(PyValueError::new_err(format!("unknown functional {other:?}"))),
    };
    let r = py
        .detach(|| pauliprop::estimate(&template.0, &observable.0, &f, samples, seed))
        .py()?;
    Ok((r.mean, r.standard_error))
}

#[pymodule]
fn pauliprop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyPauliSum>()?;
    m.add_class::<PyProductState>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(backpropagate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_exact, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    Ok(())
}
