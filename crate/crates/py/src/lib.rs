//! Python bindings. Class indices are 0-based, class names are the CSV
//! label strings.

use std::path::PathBuf;

use hdc_core::data::{self, LabelColumn};
use hdc_core::evolve::{self, GaConfig};
use hdc_core::hv::{self, build_level_table};
use hdc_core::model::{appendix_experiment as run_appendix, LevelMode};
use hdc_core::objectives;
use hdc_core::{ConfusionCounts, HdcError, Split};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: HdcError) -> PyErr {
    match e {
        HdcError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for hdc_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "Hypervector", module = "hdc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHypervector(hv::Hypervector);

#[pymethods]
impl PyHypervector {
    #[new]
    fn new(signs: Vec<i8>) -> PyResult<Self> {
        hv::Hypervector::from_signs(&signs).py().map(Self)
    }

    #[staticmethod]
    fn random(seed: u64, dim: usize) -> PyResult<Self> {
        hv::random_bipolar(seed, dim).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn signs(&self) -> Vec<i8> {
        self.0.signs()
    }

    fn dot(&self, other: &Self) -> PyResult<i64> {
        self.0.dot(&other.0).py()
    }

    fn hamming(&self, other: &Self) -> PyResult<usize> {
        self.0.hamming(&other.0).py()
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!("Hypervector(dim={})", self.0.dim())
    }
}

#[pyclass(name = "FlipBudget", module = "hdc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFlipBudget(hv::FlipBudget);

#[pymethods]
impl PyFlipBudget {
    /// `rows` holds one list of `levels - 1` flip counts per feature.
    #[new]
    fn new(dim: usize, levels: usize, rows: Vec<Vec<u32>>) -> PyResult<Self> {
        hv::FlipBudget::new(dim, levels, rows).py().map(Self)
    }

    #[staticmethod]
    fn uniform(dim: usize, features: usize, levels: usize) -> PyResult<Self> {
        hv::uniform_flip_budget(dim, features, levels).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn features(&self) -> usize {
        self.0.features()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.0.levels()
    }

    fn rows(&self) -> Vec<Vec<u32>> {
        self.0.rows().map(<[u32]>::to_vec).collect()
    }

    fn row_sums(&self) -> Vec<u64> {
        self.0.row_sums()
    }

    fn is_feasible(&self) -> bool {
        self.0.is_feasible()
    }

    /// All level hypervectors of feature `n` under level seed `seed`.
    fn level_vectors(&self, seed: u64, n: usize) -> PyResult<Vec<PyHypervector>> {
        let table = build_level_table(seed, &self.0).py()?;
        (0..self.0.levels())
            .map(|m| table.level_vector(n, m).py().map(|v| PyHypervector(v.clone())))
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("FlipBudget(dim={}, levels={}, rows={:?})", self.0.dim(), self.0.levels(), self.rows())
    }
}

#[pyclass(name = "Dataset", module = "hdc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset(data::Dataset);

fn label_column(name: &str) -> LabelColumn {
    if name.eq_ignore_ascii_case("last") {
        LabelColumn::Last
    } else {
        name.parse().unwrap()
    }
}

#[pymethods]
impl PyDataset {
    /// Builds a training dataset from rows and string labels. Classes are
    /// numbered in first-appearance order.
    #[new]
    #[pyo3(signature = (rows, labels, feature_names=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<String>, feature_names: Option<Vec<String>>) -> PyResult<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("all rows must have the same length"));
        }
        let mut names: Vec<String> = Vec::new();
        let indices = labels
            .iter()
            .map(|l| match names.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    names.push(l.clone());
                    names.len() - 1
                }
            })
            .collect();
        data::Dataset::new(rows.concat(), n, indices, names, feature_names, Split::Train)
            .py()
            .map(Self)
    }

    /// Reads a headed CSV. Pass `classes` (e.g. a model's `labels`) to
    /// reuse an existing label mapping for test data.
    #[staticmethod]
    #[pyo3(signature = (path, label_column="last", classes=None))]
    fn load_csv(path: PathBuf, label_column: &str, classes: Option<Vec<String>>) -> PyResult<Self> {
        let split = if classes.is_some() { Split::Test } else { Split::Train };
        data::load_dataset_csv(&path, &self::label_column(label_column), classes.as_deref(), split)
            .py()
            .map(Self)
    }

    /// The two-feature, four-class synthetic grid.
    #[staticmethod]
    #[pyo3(signature = (grid=40, seed=0))]
    fn motivational(grid: usize, seed: u64) -> PyResult<Self> {
        data::generate_motivational(grid, seed).py().map(Self)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        data::write_dataset_csv(&self.0, &path).py()
    }

    #[getter]
    fn samples(&self) -> usize {
        self.0.samples()
    }

    #[getter]
    fn features(&self) -> usize {
        self.0.features()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.0.classes()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn label_names(&self) -> Vec<String> {
        self.0.label_names().to_vec()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.0.feature_names().to_vec()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    fn __len__(&self) -> usize {
        self.0.samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(samples={}, features={}, classes={})",
            self.0.samples(),
            self.0.features(),
            self.0.classes()
        )
    }
}

#[pyclass(name = "Quantizer", module = "hdc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQuantizer(data::Quantizer);

#[pymethods]
impl PyQuantizer {
    #[new]
    fn new(mins: Vec<f64>, maxs: Vec<f64>, levels: usize) -> PyResult<Self> {
        data::Quantizer::new(mins, maxs, levels).py().map(Self)
    }

    #[staticmethod]
    fn calibrate(dataset: &PyDataset, levels: usize) -> PyResult<Self> {
        data::calibrate_quantizer(&dataset.0, levels).py().map(Self)
    }

    /// 0-based level index of every feature of `x`.
    fn quantize(&self, x: Vec<f64>) -> PyResult<Vec<usize>> {
        self.0.quantize_sample(&x).py()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.0.levels()
    }

    #[getter]
    fn mins(&self) -> Vec<f64> {
        self.0.mins().to_vec()
    }

    #[getter]
    fn maxs(&self) -> Vec<f64> {
        self.0.maxs().to_vec()
    }
}

#[pyclass(name = "Metrics", module = "hdc_py", frozen, get_all)]
struct PyMetrics {
    w_acc: f64,
    total_accuracy: f64,
    recalls: Vec<Option<f64>>,
    confusion: Vec<Vec<u64>>,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!("Metrics(w_acc={:.6}, total_accuracy={:.6})", self.w_acc, self.total_accuracy)
    }
}

#[pyclass(name = "TrainedModel", module = "hdc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrainedModel(hdc_core::TrainedModel);

#[pymethods]
impl PyTrainedModel {
    /// Trains with `budget`, or with uniform budgets when it is omitted.
    #[staticmethod]
    #[pyo3(signature = (dataset, dim=64, levels=20, seed=0, budget=None))]
    fn train(
        dataset: &PyDataset,
        dim: usize,
        levels: usize,
        seed: u64,
        budget: Option<&PyFlipBudget>,
    ) -> PyResult<Self> {
        let q = data::calibrate_quantizer(&dataset.0, levels).py()?;
        let model = match budget {
            None => hdc_core::TrainedModel::train_baseline(&dataset.0, q, dim, seed),
            Some(b) => build_level_table(seed, &b.0).and_then(|t| hdc_core::TrainedModel::train(&dataset.0, q, t)),
        };
        model.py().map(Self)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        data::load_model(&path).py().map(Self)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        data::save_model(&self.0, &path).py()
    }

    /// `(class name, cosine similarities)` for one sample.
    fn classify(&self, x: Vec<f64>) -> PyResult<(String, Vec<f64>)> {
        let p = self.0.classify(&x).py()?;
        Ok((self.0.labels()[p.label].clone(), p.similarities))
    }

    /// Predicted class index for every row.
    fn predict(&self, dataset: &PyDataset) -> PyResult<Vec<usize>> {
        Ok(self.0.classify_dataset(&dataset.0).py()?.into_iter().map(|p| p.label).collect())
    }

    fn evaluate(&self, dataset: &PyDataset) -> PyResult<PyMetrics> {
        let c = self.0.confusion(&dataset.0).py()?;
        Ok(PyMetrics {
            w_acc: objectives::weighted_accuracy(&c),
            total_accuracy: c.total_accuracy(),
            recalls: c.recalls(),
            confusion: (0..c.classes()).map(|k| c.row(k).to_vec()).collect(),
        })
    }

    fn avg_similarity(&self) -> PyResult<f64> {
        objectives::avg_similarity(self.0.encoders()).py()
    }

    fn encode(&self, x: Vec<f64>) -> PyResult<Vec<i32>> {
        Ok(self.0.encode(&x).py()?.into_entries())
    }

    fn encoders(&self) -> Vec<Vec<i32>> {
        self.0.encoders().iter().map(|e| e.entries().to_vec()).collect()
    }

    fn export_embeddings(&self, dataset: &PyDataset, path: PathBuf) -> PyResult<()> {
        data::export_sample_hypervectors(&self.0, &dataset.0, &path).py()
    }

    #[getter]
    fn budget(&self) -> PyFlipBudget {
        PyFlipBudget(self.0.budget().clone())
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    #[getter]
    fn serialized_size(&self) -> usize {
        self.0.serialized_size()
    }

    fn __repr__(&self) -> String {
        format!("TrainedModel(dim={}, classes={:?})", self.0.dim(), self.0.labels())
    }
}

#[pyclass(name = "FrontMember", module = "hdc_py", frozen, skip_from_py_object)]
struct PyFrontMember(evolve::FrontMember);

#[pymethods]
impl PyFrontMember {
    #[getter]
    fn w_acc(&self) -> f64 {
        self.0.scores.wacc
    }

    #[getter]
    fn avg_sim(&self) -> f64 {
        self.0.scores.avg_sim
    }

    #[getter]
    fn robustness(&self) -> f64 {
        self.0.scores.robustness
    }

    #[getter]
    fn budget(&self) -> PyFlipBudget {
        PyFlipBudget(self.0.budget.clone())
    }

    fn __repr__(&self) -> String {
        format!("FrontMember(w_acc={:.6}, avg_sim={:.6})", self.0.scores.wacc, self.0.scores.avg_sim)
    }
}

#[pyclass(name = "ParetoFront", module = "hdc_py", frozen, skip_from_py_object)]
struct PyParetoFront(evolve::ParetoFront);

#[pymethods]
impl PyParetoFront {
    /// Members sorted by descending wAcc.
    fn members(&self) -> Vec<PyFrontMember> {
        self.0.members.iter().cloned().map(PyFrontMember).collect()
    }

    #[getter]
    fn hypervolume_history(&self) -> Vec<f64> {
        self.0.hypervolume_history.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.config.seed
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_csv(&path).py()
    }

    /// Trains the model of member `index` on `dataset`, which should be
    /// the data the search ran on.
    fn model(&self, index: usize, dataset: &PyDataset) -> PyResult<PyTrainedModel> {
        let member = self
            .0
            .members
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("front has {} members", self.0.members.len())))?;
        let q = data::calibrate_quantizer(&dataset.0, self.0.config.levels).py()?;
        let table = build_level_table(self.0.config.seed, &member.budget).py()?;
        hdc_core::TrainedModel::train(&dataset.0, q, table).py().map(PyTrainedModel)
    }

    fn __len__(&self) -> usize {
        self.0.members.len()
    }
}

/// Runs NSGA-II over flip budgets. `mutation=None` means `1 / (N (M - 1))`.
#[pyfunction]
#[pyo3(signature = (dataset, dim=64, levels=20, population=200, generations=150, crossover=0.9,
                    mutation=None, tournament=2, seed=0, workers=0))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    dataset: &PyDataset,
    dim: usize,
    levels: usize,
    population: usize,
    generations: usize,
    crossover: f64,
    mutation: Option<f64>,
    tournament: usize,
    seed: u64,
    workers: usize,
) -> PyResult<PyParetoFront> {
    let config = GaConfig {
        population,
        generations,
        crossover_rate: crossover,
        mutation_rate: mutation,
        tournament_size: tournament,
        seed,
        dim,
        levels,
        workers,
    };
    let q = data::calibrate_quantizer(&dataset.0, levels).py()?;
    let train = &dataset.0;
    py.detach(|| evolve::run_optimization(train, &q, &config)).py().map(PyParetoFront)
}

/// Scores of `budget` on `dataset` as `(wAcc, avgSim)`.
#[pyfunction]
#[pyo3(signature = (budget, dataset, seed=0))]
fn evaluate_budget(budget: &PyFlipBudget, dataset: &PyDataset, seed: u64) -> PyResult<(f64, f64)> {
    let q = data::calibrate_quantizer(&dataset.0, budget.0.levels()).py()?;
    let s = objectives::evaluate_candidate(&budget.0, &dataset.0, &q, seed).py()?;
    Ok((s.wacc, s.avg_sim))
}

/// Macro recall of a `[true][predicted]` count matrix.
#[pyfunction]
fn weighted_accuracy(confusion: Vec<Vec<u64>>) -> PyResult<f64> {
    Ok(objectives::weighted_accuracy(&ConfusionCounts::from_rows(confusion).py()?))
}

#[pyfunction]
fn avg_similarity(encoders: Vec<Vec<i32>>) -> PyResult<f64> {
    let encoders: Vec<hv::IntVector> = encoders.into_iter().map(hv::IntVector::from_entries).collect();
    objectives::avg_similarity(&encoders).py()
}

/// Fraction of trials where a query just past the class boundary is
/// labelled correctly. `mode` is "chained" or "orthogonal".
#[pyfunction]
#[pyo3(signature = (dim=1024, trials=500, mode="chained", seed=0))]
fn appendix_experiment(dim: usize, trials: usize, mode: &str, seed: u64) -> PyResult<f64> {
    let mode = match mode {
        "chained" => LevelMode::Chained,
        "orthogonal" => LevelMode::Orthogonal,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    run_appendix(dim, trials, mode, seed).py()
}

#[pyfunction]
fn model_file_size(dim: usize, features: usize, levels: usize, classes: usize, name_bytes: usize) -> usize {
    data::model_file_size(dim, features, levels, classes, name_bytes)
}

#[pymodule]
fn hdc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHypervector>()?;
    m.add_class::<PyFlipBudget>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyQuantizer>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyTrainedModel>()?;
    m.add_class::<PyFrontMember>()?;
    m.add_class::<PyParetoFront>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_budget, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(avg_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(appendix_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(model_file_size, m)?)?;
    Ok(())
}
