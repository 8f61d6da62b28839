//! Python bindings: images and generators, circuits, scores, losses, ROC,
//! and the training entry points.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qcontrast::ansatz;
use qcontrast::datasets::{self, LabeledImage};
use qcontrast::evaluation;
use qcontrast::harness::{self, ExperimentConfig};
use qcontrast::params::ParamGroup;
use qcontrast::seed;
use qcontrast::training::{self, Measurement, Regime};
use qcontrast::{Error, Label};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for qcontrast::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn measurement(shots: Option<u64>) -> Measurement {
    shots.map_or(Measurement::Exact, Measurement::Shots)
}

/// A 4×4 binary image, row-major.
#[pyclass(name = "BinaryImage", module = "qcontrast", from_py_object, frozen, eq, hash)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyImage(qcontrast::BinaryImage);

#[pymethods]
impl PyImage {
    #[new]
    fn new(pixels: Vec<u8>) -> PyResult<Self> {
        qcontrast::BinaryImage::from_slice(&pixels).map(Self).or_py()
    }

    /// Image from 16 bits, the most significant being the top-left pixel.
    #[staticmethod]
    fn from_bits(bits: u16) -> Self {
        Self(qcontrast::BinaryImage::from_bits(bits))
    }

    #[staticmethod]
    fn from_grid(text: &str) -> PyResult<Self> {
        qcontrast::BinaryImage::from_grid(text).map(Self).or_py()
    }

    #[getter]
    fn pixels(&self) -> Vec<u8> {
        self.0.pixels().to_vec()
    }

    #[getter]
    fn bits(&self) -> u16 {
        self.0.to_bits()
    }

    fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    fn rotate90(&self) -> Self {
        Self(self.0.rotate90())
    }

    fn rotations(&self) -> Vec<Self> {
        self.0.rotations().into_iter().map(Self).collect()
    }

    fn quadrants(&self) -> Vec<Vec<u8>> {
        self.0.quadrants().iter().map(|q| q.to_vec()).collect()
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_grid(&self) -> String {
        self.0.to_grid()
    }

    fn is_bas(&self) -> bool {
        datasets::is_bas(&self.0)
    }

    fn is_diagonal(&self) -> bool {
        datasets::is_diagonal(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("BinaryImage.from_bits(0x{:04x})", self.0.to_bits())
    }
}

fn images(xs: Vec<qcontrast::BinaryImage>) -> Vec<PyImage> {
    xs.into_iter().map(PyImage).collect()
}

fn unwrap_images(xs: &[PyImage]) -> Vec<qcontrast::BinaryImage> {
    xs.iter().map(|x| x.0).collect()
}

#[pyfunction]
fn generate_bas() -> Vec<PyImage> {
    images(datasets::generate_bas())
}

#[pyfunction]
fn generate_diagonals() -> Vec<PyImage> {
    images(datasets::generate_diagonals())
}

/// `count` distinct single-pixel perturbations of canonical images.
#[pyfunction]
fn generate_perturbed(count: usize, seed: u64) -> PyResult<Vec<PyImage>> {
    datasets::generate_perturbed(&mut seed::rng(seed), count).map(images).or_py()
}

/// Angle values for the three parameter groups; an empty group is unbound.
#[pyclass(name = "ParameterSet", module = "qcontrast", from_py_object)]
#[derive(Clone)]
struct PyParams(qcontrast::ParameterSet);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (gamma=Vec::new(), theta=Vec::new(), phi=Vec::new()))]
    fn new(gamma: Vec<f64>, theta: Vec<f64>, phi: Vec<f64>) -> PyResult<Self> {
        qcontrast::ParameterSet::new(gamma, theta, phi).map(Self).or_py()
    }

    /// Uniform angles in [-π, π) for the named groups ("gamma", "theta", "phi").
    #[staticmethod]
    #[pyo3(signature = (seed, groups=vec!["gamma".to_string(), "theta".to_string(), "phi".to_string()]))]
    fn random(seed: u64, groups: Vec<String>) -> PyResult<Self> {
        let groups = groups
            .iter()
            .map(|g| match g.as_str() {
                "gamma" => Ok(ParamGroup::Gamma),
                "theta" => Ok(ParamGroup::Theta),
                "phi" => Ok(ParamGroup::Phi),
                other => Err(PyValueError::new_err(format!("unknown group `{other}`"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self(qcontrast::ParameterSet::random(&mut seed::rng(seed), &groups)))
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.0.gamma.clone()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.0.theta.clone()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.0.phi.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ParameterSet(gamma={:?}, theta={:?}, phi={:?})",
            self.0.gamma, self.0.theta, self.0.phi
        )
    }
}

/// A 4-qubit gate list over symbolic angles.
#[pyclass(name = "Circuit", module = "qcontrast", from_py_object)]
#[derive(Clone)]
struct PyCircuit(qcontrast::Circuit);

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        qcontrast::Circuit::from_text(text).map(Self).or_py()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Slot names such as "theta[3]", sorted.
    fn parameter_slots(&self) -> Vec<String> {
        self.0.parameter_slots().iter().map(|p| p.to_string()).collect()
    }

    fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Final amplitudes starting from |0…0⟩.
    #[pyo3(signature = (params=None))]
    fn run(&self, params: Option<&PyParams>) -> PyResult<Vec<Complex64>> {
        let p = params.map(|p| p.0.clone()).unwrap_or_default();
        Ok(qcontrast::run_circuit(&self.0, &p).or_py()?.amplitudes().to_vec())
    }

    /// Probability of measuring all zeros.
    #[pyo3(signature = (params=None))]
    fn prob_all_zeros(&self, params: Option<&PyParams>) -> PyResult<f64> {
        let p = params.map(|p| p.0.clone()).unwrap_or_default();
        Ok(qcontrast::run_circuit(&self.0, &p).or_py()?.prob_all_zeros())
    }
}

#[pyfunction]
fn u_theta() -> PyCircuit {
    PyCircuit(ansatz::u_theta())
}

#[pyfunction]
fn v_phi() -> PyCircuit {
    PyCircuit(ansatz::v_phi())
}

#[pyfunction]
fn a_gamma(image: PyImage) -> PyCircuit {
    PyCircuit(ansatz::build_a_gamma(&image.0))
}

#[pyfunction]
fn feature_circuit(image: PyImage) -> PyCircuit {
    PyCircuit(ansatz::build_feature_circuit(&image.0))
}

#[pyfunction]
fn overlap_circuit(x_i: PyImage, x_j: PyImage) -> PyCircuit {
    PyCircuit(ansatz::build_overlap_circuit(&x_i.0, &x_j.0))
}

#[pyfunction]
fn classifier_circuit(image: PyImage) -> PyCircuit {
    PyCircuit(ansatz::build_classifier_circuit(&image.0))
}

/// Amplitudes of `A_γ(x) U_θ |0⟩`.
#[pyfunction]
fn feature_state(image: PyImage, params: &PyParams) -> PyResult<Vec<Complex64>> {
    Ok(training::feature_state(&image.0, &params.0).or_py()?.amplitudes().to_vec())
}

/// State overlap `|⟨ψ(x_i)|ψ(x_j)⟩|²`, optionally shot-sampled.
#[pyfunction]
#[pyo3(signature = (x_i, x_j, params, shots=None, seed=0))]
fn overlap(x_i: PyImage, x_j: PyImage, params: &PyParams, shots: Option<u64>, seed: u64) -> PyResult<f64> {
    let ev = training::OverlapEvaluator::new(&[x_i.0, x_j.0]);
    let m = ev.matrix(&params.0, measurement(shots), &mut seed::rng(seed)).or_py()?;
    Ok(m[0][1])
}

/// Classifier scores (all-zeros probabilities), optionally shot-sampled.
#[pyfunction]
#[pyo3(signature = (images, params, shots=None, seed=0))]
fn classifier_scores(images: Vec<PyImage>, params: &PyParams, shots: Option<u64>, seed: u64) -> PyResult<Vec<f64>> {
    training::ClassifierModel::new(&unwrap_images(&images))
        .measured_scores(&params.0, measurement(shots), &mut seed::rng(seed))
        .or_py()
}

#[pyfunction]
fn sample_probability(p: f64, shots: u64, seed: u64) -> PyResult<f64> {
    qcontrast::sample_probability(p, shots, &mut seed::rng(seed)).or_py()
}

#[pyfunction]
#[pyo3(signature = (overlaps, tau=training::loss::DEFAULT_TAU))]
fn contrastive_loss(overlaps: Vec<Vec<f64>>, tau: f64) -> PyResult<f64> {
    training::contrastive_loss(&overlaps, tau).or_py()
}

#[pyfunction]
fn bce_loss(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    training::bce_loss(&scores, &labels).or_py()
}

#[pyfunction]
#[pyo3(signature = (scores, labels, threshold=0.5))]
fn accuracy(scores: Vec<f64>, labels: Vec<u8>, threshold: f64) -> PyResult<f64> {
    evaluation::accuracy(&scores, &labels, threshold).or_py()
}

/// ROC curve as a dict with thresholds, tpr, fpr, auc and the Youden point.
#[pyfunction]
fn roc<'py>(py: Python<'py>, scores: Vec<f64>, labels: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    let r = evaluation::roc(&scores, &labels).or_py()?;
    let d = PyDict::new(py);
    d.set_item("thresholds", r.thresholds)?;
    d.set_item("tpr", r.tpr)?;
    d.set_item("fpr", r.fpr)?;
    d.set_item("auc", r.auc)?;
    d.set_item("youden_threshold", r.youden_threshold)?;
    d.set_item("youden_index", r.youden_index)?;
    Ok(d)
}

/// Pair accuracies of an encoder on `images` and their rotations.
#[pyfunction]
#[pyo3(signature = (params, images, threshold=0.5, shots=None, seed=0))]
fn pair_accuracy<'py>(
    py: Python<'py>,
    params: &PyParams,
    images: Vec<PyImage>,
    threshold: f64,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let set = datasets::ContrastiveSet::new(&unwrap_images(&images)).or_py()?;
    let a = evaluation::pairwise_encoder_accuracy(&params.0, &set, threshold, measurement(shots), &mut seed::rng(seed))
        .or_py()?;
    let d = PyDict::new(py);
    d.set_item("positive", a.positive)?;
    d.set_item("negative", a.negative)?;
    d.set_item("overall", a.overall)?;
    Ok(d)
}

/// Two-phase contrastive pretraining. Returns the encoder angles and the
/// loss history of each phase.
#[pyfunction]
#[pyo3(signature = (seed, shots=None, phase1_iters=400, phase2_iters=200))]
fn pretrain_encoder<'py>(
    py: Python<'py>,
    seed: u64,
    shots: Option<u64>,
    phase1_iters: usize,
    phase2_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = training::PretrainConfig::default();
    cfg.phase1.max_iters = phase1_iters;
    cfg.phase2.max_iters = phase2_iters;
    let out = py
        .detach(|| training::pretrain_encoder(&cfg, measurement(shots), seed))
        .or_py()?;
    let d = PyDict::new(py);
    d.set_item("params", PyParams(out.params()))?;
    d.set_item("phase1_loss", out.phase1.loss_history.clone())?;
    d.set_item("phase2_loss", out.phase2.loss_history.clone())?;
    d.set_item("phase1_params", PyParams(out.phase1.params.clone()))?;
    Ok(d)
}

/// Trains a classifier on labeled images (label 1 = bars-and-stripes).
/// `regime` is "pretrained" (needs `encoder`) or "random".
#[pyfunction]
#[pyo3(signature = (images, labels, regime, seed, encoder=None, steps=100, shots=None))]
#[allow(clippy::too_many_arguments)]
fn train_classifier(
    py: Python<'_>,
    images: Vec<PyImage>,
    labels: Vec<u8>,
    regime: &str,
    seed: u64,
    encoder: Option<PyParams>,
    steps: usize,
    shots: Option<u64>,
) -> PyResult<PyParams> {
    if images.len() != labels.len() {
        return Err(PyValueError::new_err("images and labels differ in length"));
    }
    let regime: Regime = regime.parse().or_py()?;
    let train = images
        .iter()
        .zip(&labels)
        .map(|(img, &l)| {
            let label = Label::try_from(l).map_err(PyValueError::new_err)?;
            Ok(LabeledImage { image: img.0, label })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let init = training::initial_params(
        regime,
        encoder.as_ref().map(|e| &e.0),
        &mut seed::rng(seed::derive(seed, "init")),
    )
    .or_py()?;
    let mut cfg = training::ClassifierConfig::default();
    cfg.spsa.max_iters = steps;
    cfg.spsa.seed = seed::derive(seed, "spsa");
    let state = py
        .detach(|| training::train_classifier(&train, init, regime, measurement(shots), &cfg))
        .or_py()?;
    Ok(PyParams(state.params))
}

/// Runs a harness command ("pretrain", "finetune", "evaluate", "sweep",
/// "datasets") with a TOML config; returns the output directory.
#[pyfunction]
#[pyo3(signature = (command, config_toml=""))]
fn run_command(py: Python<'_>, command: &str, config_toml: &str) -> PyResult<PathBuf> {
    let cfg = ExperimentConfig::from_toml(config_toml).or_py()?;
    let out = cfg.run.out.clone();
    py.detach(|| match command {
        "pretrain" => harness::cmd_pretrain(&cfg).map(drop),
        "finetune" => harness::cmd_finetune(&cfg).map(drop),
        "evaluate" => harness::cmd_evaluate(&cfg).map(drop),
        "sweep" => harness::cmd_sweep(&cfg).map(drop),
        "datasets" => harness::cmd_datasets(&cfg).map(drop),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    })
    .or_py()?;
    Ok(out)
}

/// Dataset sizes under the membership rules, with the reference diagonal count.
#[pyfunction]
fn census() -> BTreeMap<&'static str, usize> {
    BTreeMap::from([
        ("bas", datasets::generate_bas().len()),
        ("diagonals", datasets::generate_diagonals().len()),
        ("reference_diagonals", datasets::REFERENCE_DIAGONAL_COUNT),
    ])
}

#[pymodule]
#[pyo3(name = "qcontrast")]
fn qcontrast_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(generate_bas, m)?)?;
    m.add_function(wrap_pyfunction!(generate_diagonals, m)?)?;
    m.add_function(wrap_pyfunction!(generate_perturbed, m)?)?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(u_theta, m)?)?;
    m.add_function(wrap_pyfunction!(v_phi, m)?)?;
    m.add_function(wrap_pyfunction!(a_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(feature_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(classifier_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(feature_state, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(classifier_scores, m)?)?;
    m.add_function(wrap_pyfunction!(sample_probability, m)?)?;
    m.add_function(wrap_pyfunction!(contrastive_loss, m)?)?;
    m.add_function(wrap_pyfunction!(bce_loss, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_function(wrap_pyfunction!(pair_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(pretrain_encoder, m)?)?;
    m.add_function(wrap_pyfunction!(train_classifier, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add("SLOT_LAYOUT_VERSION", ansatz::SLOT_LAYOUT_VERSION)?;
    Ok(())
}
