//! Python bindings: the main types and operations of the toolkit, exposed
//! as an extension module named `qkd_pulseopt_py`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qkd_pulseopt as core;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_nu_formula(name: &str) -> PyResult<core::NuFormula> {
    match name {
        "photon-scaled" => Ok(core::NuFormula::PhotonScaled),
        "published" => Ok(core::NuFormula::Published),
        other => Err(PyValueError::new_err(format!(
            "unknown nu_formula {other:?}; expected \"photon-scaled\" or \"published\""
        ))),
    }
}

/// A real FIR filter with its sample-rate metadata.
#[pyclass(name = "TapVector")]
#[derive(Clone)]
struct PyTapVector {
    inner: core::TapVector,
}

#[pymethods]
impl PyTapVector {
    #[new]
    #[pyo3(signature = (taps, sps, label="custom"))]
    fn new(taps: Vec<f64>, sps: u32, label: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::TapVector::new(taps, sps, label).map_err(err)?,
        })
    }

    #[getter]
    fn taps(&self) -> Vec<f64> {
        self.inner.taps().to_vec()
    }

    #[getter]
    fn sps(&self) -> u32 {
        self.inner.sps()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn roll_off(&self) -> Option<f64> {
        self.inner.roll_off()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn normalize_energy(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.normalize_energy().map_err(err)?,
        })
    }

    fn truncate_centered(&self, num_taps: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.truncate_centered(num_taps).map_err(err)?,
        })
    }

    /// Canonical JSON document (the same format the CLI persists).
    fn to_json(&self) -> String {
        core::io::taps_to_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::taps_from_json(text).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TapVector(label={:?}, sps={}, taps={})",
            self.inner.label(),
            self.inner.sps(),
            self.inner.len()
        )
    }
}

/// Overlap coefficients between a transmitter and receiver filter.
#[pyclass(name = "OverlapCoefficients")]
#[derive(Clone)]
struct PyOverlap {
    inner: core::OverlapCoefficients,
}

#[pymethods]
impl PyOverlap {
    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0()
    }

    #[getter]
    fn isi_power(&self) -> f64 {
        self.inner.isi_power()
    }

    fn at(&self, lag: i32) -> f64 {
        self.inner.at(lag)
    }

    /// All stored (lag, value) pairs in ascending lag order.
    fn lags(&self) -> Vec<(i32, f64)> {
        self.inner.iter().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "OverlapCoefficients(c0={}, isi_power={})",
            self.inner.c0(),
            self.inner.isi_power()
        )
    }
}

/// Link parameters for one key-rate evaluation.
#[pyclass(name = "LinkParams")]
#[derive(Clone)]
struct PyLinkParams {
    inner: core::LinkParams,
}

#[pymethods]
impl PyLinkParams {
    #[new]
    #[pyo3(signature = (n_bar, tau_ch, n_ch=0.0, beta=0.95, roll_off=0.1, nu_formula="photon-scaled"))]
    fn new(
        n_bar: f64,
        tau_ch: f64,
        n_ch: f64,
        beta: f64,
        roll_off: f64,
        nu_formula: &str,
    ) -> PyResult<Self> {
        let inner = core::LinkParams::new(n_bar, tau_ch, n_ch, beta, roll_off)
            .map_err(err)?
            .with_nu_formula(parse_nu_formula(nu_formula)?);
        Ok(Self { inner })
    }

    #[getter]
    fn n_bar(&self) -> f64 {
        self.inner.n_bar()
    }
    #[getter]
    fn tau_ch(&self) -> f64 {
        self.inner.tau_ch()
    }
    #[getter]
    fn n_ch(&self) -> f64 {
        self.inner.n_ch()
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }
    #[getter]
    fn roll_off(&self) -> f64 {
        self.inner.roll_off()
    }
    #[getter]
    fn nu_formula(&self) -> &'static str {
        match self.inner.nu_formula() {
            core::NuFormula::PhotonScaled => "photon-scaled",
            core::NuFormula::Published => "published",
        }
    }
}

/// Result of one link evaluation.
#[pyclass(name = "SkrReport")]
#[derive(Clone)]
struct PySkrReport {
    inner: core::SkrReport,
}

#[pymethods]
impl PySkrReport {
    #[getter]
    fn c0_sq(&self) -> f64 {
        self.inner.c0_sq
    }
    #[getter]
    fn isi_power(&self) -> f64 {
        self.inner.isi_power
    }
    #[getter]
    fn n_ex(&self) -> f64 {
        self.inner.n_ex
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn mutual_info_bits(&self) -> f64 {
        self.inner.mutual_info_bits
    }
    #[getter]
    fn holevo_bits(&self) -> f64 {
        self.inner.holevo_bits
    }
    #[getter]
    fn nu_plus(&self) -> f64 {
        self.inner.nu_plus
    }
    #[getter]
    fn nu_minus(&self) -> f64 {
        self.inner.nu_minus
    }
    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }
    #[getter]
    fn skr_bits_per_symbol(&self) -> f64 {
        self.inner.skr_bits_per_symbol
    }
    #[getter]
    fn kse_bits_per_symbol(&self) -> f64 {
        self.inner.kse_bits_per_symbol
    }

    fn __repr__(&self) -> String {
        format!(
            "SkrReport(skr={}, kse={}, n_ex={})",
            self.inner.skr_bits_per_symbol, self.inner.kse_bits_per_symbol, self.inner.n_ex
        )
    }
}

/// Optimization history and outcome.
#[pyclass(name = "OptimizationTrace")]
struct PyTrace {
    inner: core::optimize::OptimizationTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn final_taps(&self) -> PyTapVector {
        PyTapVector {
            inner: self.inner.final_taps.clone(),
        }
    }

    #[getter]
    fn final_report(&self) -> PySkrReport {
        PySkrReport {
            inner: self.inner.final_report,
        }
    }

    #[getter]
    fn final_skr(&self) -> f64 {
        self.inner.final_skr()
    }

    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            core::optimize::ConvergenceStatus::GradientConverged => "gradient-converged",
            core::optimize::ConvergenceStatus::MaxIterations => "max-iterations",
            core::optimize::ConvergenceStatus::Stalled => "stalled",
        }
    }

    /// (iteration, best_skr, mean_skr, sigma) rows.
    fn iterations(&self) -> Vec<(usize, f64, f64, f64)> {
        self.inner
            .iterations
            .iter()
            .map(|p| (p.iteration, p.best_skr, p.mean_skr, p.sigma))
            .collect()
    }
}

/// Root-raised-cosine taps, unit energy, symmetric and center-aligned.
#[pyfunction]
fn rrc_taps(roll_off: f64, sps: u32, num_taps: usize) -> PyResult<PyTapVector> {
    Ok(PyTapVector {
        inner: core::rrc_taps(roll_off, sps, num_taps).map_err(err)?,
    })
}

/// Magnitude response on `num_points` DFT bins: `(f_times_t, magnitude_db)`.
#[pyfunction]
fn frequency_response(filter: &PyTapVector, num_points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let r = core::frequency_response(&filter.inner, num_points).map_err(err)?;
    Ok((r.normalized_frequency, r.magnitude_db))
}

/// Overlap coefficients of a unit-energy transmitter/receiver pair.
#[pyfunction]
fn mode_overlap(tx: &PyTapVector, rx: &PyTapVector) -> PyResult<PyOverlap> {
    Ok(PyOverlap {
        inner: core::mode_overlap(&tx.inner, &rx.inner).map_err(err)?,
    })
}

/// `(c0², Σ_{j≠0} c_j²)`.
#[pyfunction]
fn isi_summary(overlap: &PyOverlap) -> (f64, f64) {
    core::isi_summary(&overlap.inner)
}

/// Bosonic entropy g(x).
#[pyfunction]
fn bosonic_entropy(x: f64) -> PyResult<f64> {
    core::bosonic_entropy(x).map_err(err)
}

/// Total excess noise for an overlap and link.
#[pyfunction]
fn excess_noise(overlap: &PyOverlap, params: &PyLinkParams) -> f64 {
    core::excess_noise(&overlap.inner, &params.inner)
}

/// Symplectic eigenvalues `(nu_plus, nu_minus, nu)`.
#[pyfunction]
#[pyo3(signature = (tau, n_bar, n_ex, nu_formula="photon-scaled"))]
fn symplectic_eigenvalues(
    tau: f64,
    n_bar: f64,
    n_ex: f64,
    nu_formula: &str,
) -> PyResult<(f64, f64, f64)> {
    core::symplectic_eigenvalues(tau, n_bar, n_ex, parse_nu_formula(nu_formula)?).map_err(err)
}

/// Full key-rate evaluation from overlap coefficients.
#[pyfunction]
fn secret_key_rate(overlap: &PyOverlap, params: &PyLinkParams) -> PyResult<PySkrReport> {
    Ok(PySkrReport {
        inner: core::secret_key_rate(&overlap.inner, &params.inner).map_err(err)?,
    })
}

/// Key-rate evaluation from the two overlap scalars (`c0_sq`, `isi_power`).
#[pyfunction]
fn secret_key_rate_from_scalars(
    c0_sq: f64,
    isi_power: f64,
    params: &PyLinkParams,
) -> PyResult<PySkrReport> {
    Ok(PySkrReport {
        inner: core::secret_key_rate_from_scalars(c0_sq, isi_power, &params.inner).map_err(err)?,
    })
}

/// Fiber transmittance for a span.
#[pyfunction]
#[pyo3(signature = (distance_km, attenuation_db_per_km=0.2))]
fn channel_transmittance(distance_km: f64, attenuation_db_per_km: f64) -> f64 {
    core::channel_transmittance(distance_km, attenuation_db_per_km)
}

/// SKR / (1 + roll-off).
#[pyfunction]
fn key_spectral_efficiency(skr: f64, roll_off: f64) -> f64 {
    core::key_spectral_efficiency(skr, roll_off)
}

/// Raw-tap objective (normalizes internally; degenerate inputs score a
/// large negative sentinel).
#[pyfunction]
fn objective(taps: Vec<f64>, rx: &PyTapVector, params: &PyLinkParams) -> f64 {
    core::optimize::objective(&taps, &rx.inner, &params.inner)
}

fn build_optimizer_config(
    method: core::optimize::Method,
    num_taps: usize,
    max_iterations: usize,
    seed: u64,
    init: Option<&PyTapVector>,
) -> PyResult<core::optimize::OptimizerConfig> {
    let mut cfg =
        core::optimize::OptimizerConfig::new(method, num_taps, max_iterations, seed).map_err(err)?;
    cfg.init = init.map(|v| v.inner.clone());
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Policy-gradient tap optimization.
#[pyfunction]
#[pyo3(signature = (rx, params, num_taps=13, max_iterations=4000, seed=1, init=None))]
fn optimize_reinforce(
    rx: &PyTapVector,
    params: &PyLinkParams,
    num_taps: usize,
    max_iterations: usize,
    seed: u64,
    init: Option<&PyTapVector>,
) -> PyResult<PyTrace> {
    let cfg = build_optimizer_config(
        core::optimize::Method::Reinforce,
        num_taps,
        max_iterations,
        seed,
        init,
    )?;
    Ok(PyTrace {
        inner: core::optimize::optimize_reinforce(&cfg, &rx.inner, &params.inner).map_err(err)?,
    })
}

/// Projected finite-difference gradient ascent.
#[pyfunction]
#[pyo3(signature = (rx, params, num_taps=13, max_iterations=2000, seed=1, init=None))]
fn optimize_gradient(
    rx: &PyTapVector,
    params: &PyLinkParams,
    num_taps: usize,
    max_iterations: usize,
    seed: u64,
    init: Option<&PyTapVector>,
) -> PyResult<PyTrace> {
    let cfg = build_optimizer_config(
        core::optimize::Method::Gradient,
        num_taps,
        max_iterations,
        seed,
        init,
    )?;
    Ok(PyTrace {
        inner: core::optimize::optimize_gradient(&cfg, &rx.inner, &params.inner).map_err(err)?,
    })
}

/// Symbol-level simulation; returns a dict with the statistics and the
/// per-symbol complex streams.
#[pyfunction]
fn simulate_transmission(
    py: Python<'_>,
    num_symbols: usize,
    seed: u64,
    tx: &PyTapVector,
    rx: &PyTapVector,
    params: &PyLinkParams,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let cfg = core::montecarlo::SimConfig {
        num_symbols,
        seed,
        tx: tx.inner.clone(),
        rx: rx.inner.clone(),
        params: params.inner,
    };
    let r = core::montecarlo::simulate_transmission(&cfg).map_err(err)?;
    let to_py = |v: &[Complex64]| -> Vec<(f64, f64)> { v.iter().map(|z| (z.re, z.im)).collect() };
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("gain", r.gain)?;
    dict.set_item("total_noise_variance", r.total_noise_variance)?;
    dict.set_item("isi_variance", r.isi_variance)?;
    dict.set_item("guard", r.guard)?;
    dict.set_item("sent", to_py(&r.sent))?;
    dict.set_item("received", to_py(&r.received))?;
    Ok(dict.into())
}

#[pymodule]
fn qkd_pulseopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTapVector>()?;
    m.add_class::<PyOverlap>()?;
    m.add_class::<PyLinkParams>()?;
    m.add_class::<PySkrReport>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(rrc_taps, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_response, m)?)?;
    m.add_function(wrap_pyfunction!(mode_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(isi_summary, m)?)?;
    m.add_function(wrap_pyfunction!(bosonic_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(excess_noise, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(secret_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(secret_key_rate_from_scalars, m)?)?;
    m.add_function(wrap_pyfunction!(channel_transmittance, m)?)?;
    m.add_function(wrap_pyfunction!(key_spectral_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_reinforce, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_transmission, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
