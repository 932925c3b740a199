//! Python bindings. Frequencies and rates are in rad/μs and times in μs, as
//! in the Rust library; `khz_to_angular` converts from kHz.

use std::fmt::Display;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use holeburn::analysis;
use holeburn::liouville;
use holeburn::model::{self, Role, ScenarioConfig, SolverSettings};
use holeburn::propagation::{self, OpticalPulseTrace, ProbePulseSpec};
use holeburn::spectra::{self, FrequencyGrid, HoleBurnConfig};

fn invalid<E: Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn failed<E: Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyfunction]
fn khz_to_angular(khz: f64) -> f64 {
    model::khz_to_angular(khz)
}

#[pyfunction]
fn angular_to_khz(omega: f64) -> f64 {
    model::angular_to_khz(omega)
}

/// Energy levels and their optically allowed transitions.
#[pyclass(name = "LevelScheme", frozen, from_py_object)]
#[derive(Clone)]
struct PyLevelScheme(model::LevelScheme);

#[pymethods]
impl PyLevelScheme {
    /// `levels` are `(label, "ground" | "excited")` pairs.
    #[new]
    fn new(levels: Vec<(String, String)>, transitions: Vec<(String, String)>) -> PyResult<Self> {
        let levels = levels
            .into_iter()
            .map(|(l, r)| match r.as_str() {
                "ground" => Ok((l, Role::Ground)),
                "excited" => Ok((l, Role::Excited)),
                other => Err(PyValueError::new_err(format!("unknown role `{other}`"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        model::LevelScheme::new(&levels, &transitions).map(Self).map_err(invalid)
    }

    /// Pr:YSO levels 1, 2, 3 (ground) and 5 (excited).
    #[staticmethod]
    fn pr_yso() -> Self {
        Self(model::build_pr_yso_scheme())
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("LevelScheme({:?})", self.0.labels())
    }
}

/// Population decay and dephasing rates, 1/μs.
#[pyclass(name = "Relaxation", frozen, from_py_object)]
#[derive(Clone, Default)]
struct PyRelaxation(model::RelaxationSpec);

#[pymethods]
impl PyRelaxation {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Pr:YSO defaults from rates in kHz.
    #[staticmethod]
    #[pyo3(signature = (decay_khz = 1.0, optical_khz = 50.0, ground_khz = 100.0))]
    fn pr_yso(decay_khz: f64, optical_khz: f64, ground_khz: f64) -> Self {
        Self(model::pr_yso_relaxation(decay_khz, optical_khz, ground_khz))
    }

    /// Returns a copy with an extra decay channel `source → target`.
    fn decay(&self, source: &str, target: &str, rate: f64) -> Self {
        Self(self.0.clone().decay(source, target, rate))
    }

    /// Returns a copy with a pure dephasing rate for the coherence a-b.
    fn coherence(&self, a: &str, b: &str, rate: f64) -> Self {
        Self(self.0.clone().coherence(a, b, rate))
    }

    fn decay_out_of(&self, level: &str) -> f64 {
        self.0.decay_out_of(level)
    }
}

#[pyclass(name = "Pulse", frozen, from_py_object)]
#[derive(Clone)]
struct PyPulse(model::Pulse);

#[pymethods]
impl PyPulse {
    #[staticmethod]
    #[pyo3(signature = (label, transition, start, duration, rabi, detuning = 0.0))]
    fn rectangular(label: &str, transition: (String, String), start: f64, duration: f64, rabi: f64, detuning: f64) -> Self {
        Self(model::Pulse::rectangular(label, (&transition.0, &transition.1), start, duration, rabi).with_detuning(detuning))
    }

    /// Gaussian envelope peaking at `center` with intensity FWHM `fwhm`.
    #[staticmethod]
    #[pyo3(signature = (label, transition, center, fwhm, rabi, detuning = 0.0))]
    fn gaussian(label: &str, transition: (String, String), center: f64, fwhm: f64, rabi: f64, detuning: f64) -> Self {
        Self(model::Pulse::gaussian(label, (&transition.0, &transition.1), center, fwhm, rabi).with_detuning(detuning))
    }

    #[getter]
    fn label(&self) -> &str {
        &self.0.label
    }

    /// ∫Ω(t)dt in radians.
    #[getter]
    fn area(&self) -> f64 {
        analysis::pulse_area(&self.0)
    }

    fn envelope(&self, t: f64) -> f64 {
        self.0.envelope(t)
    }
}

/// Sampled master-equation solution.
#[pyclass(name = "TimeSeries", frozen)]
struct PyTimeSeries(liouville::TimeSeries);

#[pymethods]
impl PyTimeSeries {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels.clone()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings.clone()
    }

    #[getter]
    fn max_hermiticity_drift(&self) -> f64 {
        self.0.max_hermiticity_drift
    }

    fn population(&self, label: &str) -> PyResult<Vec<f64>> {
        self.0.population(label).map_err(invalid)
    }

    fn coherence(&self, a: &str, b: &str) -> PyResult<Vec<Complex64>> {
        self.0.coherence(a, b).map_err(invalid)
    }

    fn traces(&self) -> Vec<f64> {
        self.0.states.iter().map(|s| s.trace().re).collect()
    }

    fn min_eigenvalues(&self) -> Vec<f64> {
        self.0.states.iter().map(|s| s.min_eigenvalue()).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Integrates the master equation over `t_span`. `initial` maps level
/// labels to populations; missing levels start empty.
#[pyfunction]
#[pyo3(signature = (scheme, relaxation, pulses, initial, t_span, rtol = 1e-8, atol = 1e-10, sample_step = 0.1))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    scheme: &PyLevelScheme,
    relaxation: &PyRelaxation,
    pulses: Vec<PyPulse>,
    initial: Vec<(String, f64)>,
    t_span: (f64, f64),
    rtol: f64,
    atol: f64,
    sample_step: f64,
) -> PyResult<PyTimeSeries> {
    let cfg = ScenarioConfig {
        scheme: scheme.0.clone(),
        relaxation: relaxation.0.clone(),
        pulses: model::PulseSequence::new(pulses.into_iter().map(|p| p.0).collect()),
        initial_populations: initial,
        solver: SolverSettings { rtol, atol, sample_step },
    };
    let valid = cfg.validate().map_err(invalid)?;
    py.detach(|| liouville::evolve_validated(&valid, t_span))
        .map(PyTimeSeries)
        .map_err(failed)
}

/// Lorentzian spectral hole with its Kramers–Kronig phase.
#[pyclass(name = "HoleSpectrum", frozen)]
struct PyHoleSpectrum(spectra::AbsorptionSpectrum);

#[pymethods]
impl PyHoleSpectrum {
    /// `fwhm` is the hole FWHM in rad/μs; the grid spans `span_fwhm` hole
    /// widths with `points_per_fwhm` samples each.
    #[new]
    #[pyo3(signature = (optical_depth, depth, fwhm, span_fwhm = 64.0, points_per_fwhm = 64.0))]
    fn new(optical_depth: f64, depth: f64, fwhm: f64, span_fwhm: f64, points_per_fwhm: f64) -> PyResult<Self> {
        let cfg = HoleBurnConfig::new(optical_depth, depth, fwhm);
        let grid = FrequencyGrid::for_width(fwhm, span_fwhm, points_per_fwhm);
        let hole = spectra::hole_spectrum(&cfg, grid).map_err(invalid)?;
        spectra::kramers_kronig(&hole).map(Self).map_err(failed)
    }

    #[getter]
    fn detunings(&self) -> Vec<f64> {
        self.0.frequencies()
    }

    #[getter]
    fn alpha_l(&self) -> Vec<f64> {
        self.0.alpha_l.clone()
    }

    #[getter]
    fn phase(&self) -> Vec<f64> {
        self.0.phase.clone()
    }

    /// dφ/dω in μs, at the hole centre by default.
    #[pyo3(signature = (omega = None))]
    fn group_delay(&self, omega: Option<f64>) -> PyResult<f64> {
        spectra::group_delay(&self.0, omega.unwrap_or(self.0.hole_center)).map_err(failed)
    }

    /// Propagates a Gaussian probe and returns `(times, I_in, I_out)`.
    #[pyo3(signature = (fwhm, center, window, step = 0.1, peak_intensity = 1.0, carrier_detuning = 0.0))]
    fn propagate(
        &self,
        fwhm: f64,
        center: f64,
        window: (f64, f64),
        step: f64,
        peak_intensity: f64,
        carrier_detuning: f64,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let probe = ProbePulseSpec {
            fwhm,
            center,
            carrier_detuning,
            peak_intensity,
            window,
            step,
        };
        probe.validate().map_err(invalid)?;
        let input = probe.input_trace();
        let out = propagation::propagate_pulse(&probe, &self.0).map_err(failed)?;
        Ok((input.times.clone(), input.intensity(), out.intensity()))
    }
}

/// Dominant oscillation of `values(times)` inside `window`, as a dict.
#[pyfunction]
fn extract_oscillation_frequency<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    window: (f64, f64),
) -> PyResult<Bound<'py, PyDict>> {
    let e = analysis::extract_oscillation_frequency(&times, &values, window).map_err(invalid)?;
    let d = PyDict::new(py);
    d.set_item("frequency_khz", e.frequency_khz)?;
    d.set_item("amplitude", e.amplitude)?;
    d.set_item("damping_rate", e.damping_rate)?;
    d.set_item("method", e.method.tag())?;
    d.set_item("extrema_frequency_khz", e.extrema_frequency_khz)?;
    d.set_item("extrema_count", e.extrema_count)?;
    d.set_item("note", e.note)?;
    Ok(d)
}

/// Least-squares `f = intercept + slope·√I`; returns `(slope, intercept, r_squared)`.
#[pyfunction]
fn fit_sqrt_law(intensities: Vec<f64>, frequencies: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if intensities.len() != frequencies.len() {
        return Err(PyValueError::new_err("intensities and frequencies differ in length"));
    }
    let points: Vec<(f64, f64)> = intensities.into_iter().zip(frequencies).collect();
    let fit = analysis::fit_sqrt_law(&points).map_err(invalid)?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

/// Centroid and peak delay of `output` relative to `input`, μs.
#[pyfunction]
fn measure_delay(times: Vec<f64>, input: Vec<f64>, output: Vec<f64>) -> PyResult<(f64, f64)> {
    if input.len() != times.len() || output.len() != times.len() {
        return Err(PyValueError::new_err("traces must match the time grid"));
    }
    let a = OpticalPulseTrace::from_intensity("input", times.clone(), &input);
    let b = OpticalPulseTrace::from_intensity("output", times, &output);
    let d = analysis::measure_delay(&a, &b).map_err(invalid)?;
    Ok((d.centroid, d.peak))
}

/// Runs a scenario from configuration text (the CLI format). Returns a dict
/// with `scenario`, `summary` (key → value) and `files` (path → contents).
#[pyfunction]
fn run_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let settings = holeburn_cli::Settings::parse(text).map_err(invalid)?;
    let report = py.detach(|| holeburn_cli::run_scenario(&settings)).map_err(failed)?;
    let d = PyDict::new(py);
    d.set_item("scenario", report.scenario.to_string())?;
    let summary = PyDict::new(py);
    for (k, v) in &report.summary {
        summary.set_item(k, v)?;
    }
    d.set_item("summary", summary)?;
    let files = PyDict::new(py);
    for a in &report.artifacts {
        files.set_item(a.path.to_string_lossy(), String::from_utf8_lossy(&a.contents))?;
    }
    d.set_item("files", files)?;
    Ok(d)
}

#[pymodule]
fn holeburn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLevelScheme>()?;
    m.add_class::<PyRelaxation>()?;
    m.add_class::<PyPulse>()?;
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyHoleSpectrum>()?;
    m.add_function(wrap_pyfunction!(khz_to_angular, m)?)?;
    m.add_function(wrap_pyfunction!(angular_to_khz, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(extract_oscillation_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(fit_sqrt_law, m)?)?;
    m.add_function(wrap_pyfunction!(measure_delay, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
