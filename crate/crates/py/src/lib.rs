//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use stackbench::model::{fit_algorithm, AlgorithmSpec, PRESET_NAMES};
use stackbench::simgen::{self, SimCondition};
use stackbench::{ensembles, metrics, Dataset, FittedModel, Matrix, ModelDocument, Probabilities, SeededRng};

fn err(e: stackbench::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn probabilities(values: Vec<f64>) -> PyResult<Probabilities> {
    Probabilities::new(values).map_err(err)
}

fn condition(id: &str) -> PyResult<SimCondition> {
    SimCondition::from_id(id).map_err(err)
}

/// A fitted model of any kind.
#[pyclass(module = "stackbench", frozen)]
pub struct Model {
    doc: ModelDocument,
}

#[pymethods]
impl Model {
    #[getter]
    fn n_features(&self) -> usize {
        self.doc.model.n_features()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.doc.feature_names.clone()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.doc.model {
            FittedModel::Learner(_) => "learner",
            FittedModel::Superlearner(_) => "superlearner",
            FittedModel::Cascade(_) => "cascade",
        }
    }

    /// Superlearner weights, or None for other kinds.
    fn weights(&self) -> Option<Vec<f64>> {
        match &self.doc.model {
            FittedModel::Superlearner(m) => m.weights().map(|w| w.weights.clone()),
            _ => None,
        }
    }

    fn predict(&self, py: Python<'_>, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = matrix(features)?;
        let model = &self.doc.model;
        py.detach(|| model.predict(&x)).map(Probabilities::into_vec).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.doc.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Model> {
        Ok(Model { doc: ModelDocument::from_json(text).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={:?}, n_features={})", self.kind(), self.n_features())
    }
}

/// Generates `(features, labels, feature_names)` for a condition id such as
/// `"mixed-high-mis"`.
#[pyfunction]
#[pyo3(signature = (condition_id, n, seed = 0))]
fn simulate(condition_id: &str, n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<u8>, Vec<String>)> {
    let data = simgen::generate(&condition(condition_id)?, n, &mut SeededRng::new(seed)).map_err(err)?;
    let rows = data.features().row_iter().map(<[f64]>::to_vec).collect();
    Ok((rows, data.labels().to_vec(), data.feature_names().to_vec()))
}

#[pyfunction]
fn condition_catalog() -> Vec<String> {
    simgen::condition_catalog().iter().map(SimCondition::id).collect()
}

#[pyfunction]
#[pyo3(signature = (condition_id, n_mc = 100_000, seed = 0))]
fn bayes_accuracy(condition_id: &str, n_mc: usize, seed: u64) -> PyResult<f64> {
    simgen::bayes_accuracy(&condition(condition_id)?, n_mc, &mut SeededRng::new(seed)).map_err(err)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Fits a preset (by name) or an algorithm spec given as a JSON string.
#[pyfunction]
#[pyo3(signature = (algo, features, labels, seed = 0, feature_names = None))]
fn fit(
    py: Python<'_>,
    algo: &str,
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    seed: u64,
    feature_names: Option<Vec<String>>,
) -> PyResult<Model> {
    let spec = if algo.trim_start().starts_with('{') {
        serde_json::from_str::<AlgorithmSpec>(algo).map_err(|e| PyValueError::new_err(e.to_string()))?
    } else {
        AlgorithmSpec::preset(algo).map_err(err)?
    };
    let x = matrix(features)?;
    let data = match feature_names {
        Some(names) => Dataset::new(x, labels, names),
        None => Dataset::unnamed(x, labels),
    }
    .map_err(err)?;
    let (model, _) = py.detach(|| fit_algorithm(&spec, &data, &SeededRng::new(seed))).map_err(err)?;
    Ok(Model { doc: ModelDocument::new(seed, data.feature_names().to_vec(), spec, model) })
}

#[pyfunction]
#[pyo3(signature = (probs, labels, threshold = metrics::DEFAULT_THRESHOLD))]
fn accuracy(probs: Vec<f64>, labels: Vec<u8>, threshold: f64) -> PyResult<f64> {
    metrics::accuracy(&probabilities(probs)?, &labels, threshold).map_err(err)
}

#[pyfunction]
fn auc(probs: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    metrics::auc(&probabilities(probs)?, &labels).map_err(err)
}

/// `(fnr, fpr)` at the threshold.
#[pyfunction]
#[pyo3(signature = (probs, labels, threshold = metrics::DEFAULT_THRESHOLD))]
fn confusion_rates(probs: Vec<f64>, labels: Vec<u8>, threshold: f64) -> PyResult<(f64, f64)> {
    metrics::confusion_rates(&probabilities(probs)?, &labels, threshold).map_err(err)
}

/// Least squares over the probability simplex; `z` is a list of rows.
#[pyfunction]
fn nnls_solve(z: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(ensembles::nnls_solve(&matrix(z)?, &y).map_err(err)?.weights)
}

#[pymodule]
#[pyo3(name = "stackbench")]
pub fn stackbench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(condition_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_rates, m)?)?;
    m.add_function(wrap_pyfunction!(nnls_solve, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
