//! Python bindings. Potentials are passed as coefficient strings ("0,0.5") and
//! complex arguments as Python `complex`. Values that can overflow come back as
//! [`Scaled`] (`log_mag`, `phase`); library errors raise `CharpolyError`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use charpoly::asymptotics::{dyson_predict, ScalingPoint};
use charpoly::correlators::{CorrelatorKind, CorrelatorSpec};
use charpoly::ensemble::{EnsembleConfig, Potential, QuadratureSpec};
use charpoly::equilibrium::EquilibriumMeasure;
use charpoly::identities::{run_suite, Suite};
use charpoly::kernels::{self, KernelKind};
use charpoly::montecarlo::{estimate_correlator, SamplerSpec};
use charpoly::orthopoly::{build_recurrence, RecurrenceTable};
use charpoly::{format, Complex64, Error, ScaledComplex};

create_exception!(charpoly, CharpolyError, PyValueError);

fn err(e: Error) -> PyErr {
    CharpolyError::new_err(e.to_string())
}

/// `exp(log_mag) * phase`.
#[pyclass(frozen, skip_from_py_object, module = "charpoly")]
#[derive(Clone, Copy)]
pub struct Scaled {
    #[pyo3(get)]
    log_mag: f64,
    #[pyo3(get)]
    phase: Complex64,
}

#[pymethods]
impl Scaled {
    /// The plain complex value (may overflow to inf).
    fn value(&self) -> Complex64 {
        ScaledComplex::from_parts(self.log_mag, self.phase).to_complex()
    }

    fn __complex__(&self) -> Complex64 {
        self.value()
    }

    fn __repr__(&self) -> String {
        format!("Scaled(log_mag={}, phase={})", self.log_mag, format::fmt_complex(self.phase))
    }
}

impl From<ScaledComplex> for Scaled {
    fn from(v: ScaledComplex) -> Self {
        Self { log_mag: v.log_mag, phase: v.phase }
    }
}

fn setup(v_coeffs: &str, n: usize, extra: usize, tol: Option<f64>) -> Result<(EnsembleConfig, RecurrenceTable, QuadratureSpec), Error> {
    let v: Potential = v_coeffs.parse()?;
    let cfg = EnsembleConfig::new(v, n)?;
    let q = match tol {
        Some(t) => QuadratureSpec::with_tol(t)?,
        None => QuadratureSpec::default(),
    };
    let t = build_recurrence(&cfg, n + extra, &q)?;
    Ok((cfg, t, q))
}

fn kind_of(name: &str) -> PyResult<CorrelatorKind> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "f1" => CorrelatorKind::F1,
        "f2" => CorrelatorKind::F2,
        "f3" => CorrelatorKind::F3,
        "f4" => CorrelatorKind::F4,
        "f5" => CorrelatorKind::F5,
        "gen" | "general" => CorrelatorKind::General,
        other => return Err(PyValueError::new_err(format!("unknown correlator kind {other:?}"))),
    })
}

fn spec(kind: &str, mu: Vec<Complex64>, eps: Vec<Complex64>, lambda: Vec<Complex64>, omega: Vec<Complex64>) -> PyResult<CorrelatorSpec> {
    let s = CorrelatorSpec { kind: kind_of(kind)?, mu, eps, lambda, omega };
    s.validate().map_err(err)?;
    Ok(s)
}

/// Recurrence coefficients `(a, b, log_c2)` of depth `k_max`.
#[pyfunction]
#[pyo3(signature = (v_coeffs, n, k_max, tol=None))]
fn recurrence(v_coeffs: &str, n: usize, k_max: usize, tol: Option<f64>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if k_max < n {
        return Err(PyValueError::new_err("k_max must be at least n"));
    }
    let (_, t, _) = setup(v_coeffs, n, k_max - n, tol).map_err(err)?;
    Ok((t.a, t.b, t.log_c2))
}

/// Cauchy transform `h_k(eps)`.
#[pyfunction]
#[pyo3(signature = (v_coeffs, n, k, eps, tol=None))]
fn cauchy(v_coeffs: &str, n: usize, k: usize, eps: Complex64, tol: Option<f64>) -> PyResult<Scaled> {
    let v: Potential = v_coeffs.parse().map_err(err)?;
    let cfg = EnsembleConfig::new(v, n).map_err(err)?;
    let q = tol.map(QuadratureSpec::with_tol).transpose().map_err(err)?.unwrap_or_default();
    let t = build_recurrence(&cfg, k + 2, &q).map_err(err)?;
    charpoly::cauchy::eval_cauchy(&t, &cfg, k, eps, &q).map(Scaled::from).map_err(err)
}

/// Finite-N kernel `w1`, `w2`, `w3` (index `n`) or limiting `s1`, `s2`, `s3`.
#[pyfunction]
#[pyo3(signature = (kind, a, b, v_coeffs="0,0.5", n=10))]
fn kernel(kind: &str, a: Complex64, b: Complex64, v_coeffs: &str, n: usize) -> PyResult<Scaled> {
    let limit = |k: KernelKind| kernels::limit_kernel(k, a, b).map(|z| ScaledComplex::from(z).into()).map_err(err);
    match kind {
        "s1" => return limit(KernelKind::I),
        "s2" => return limit(KernelKind::II),
        "s3" => return limit(KernelKind::III),
        _ => {}
    }
    let (cfg, t, q) = setup(v_coeffs, n, 2, None).map_err(err)?;
    let v = match kind {
        "w1" => kernels::kernel_w1(&t, n, a, b),
        "w2" => kernels::kernel_w2(&t, &cfg, n, a, b, &q),
        "w3" => kernels::kernel_w3(&t, &cfg, n, a, b, &q),
        other => return Err(PyValueError::new_err(format!("unknown kernel kind {other:?}"))),
    };
    v.map(Scaled::from).map_err(err)
}

/// Exact correlation function of the given kind.
#[pyfunction]
#[pyo3(signature = (kind, v_coeffs, n, mu=vec![], eps=vec![], lambda_=vec![], omega=vec![]))]
fn correlator(
    kind: &str,
    v_coeffs: &str,
    n: usize,
    mu: Vec<Complex64>,
    eps: Vec<Complex64>,
    lambda_: Vec<Complex64>,
    omega: Vec<Complex64>,
) -> PyResult<Scaled> {
    let s = spec(kind, mu, eps, lambda_, omega)?;
    let extra = s.numerator().len() + s.denominator().len() + 2;
    let (cfg, t, q) = setup(v_coeffs, n, extra, None).map_err(err)?;
    s.evaluate(&t, &cfg, &q).map(Scaled::from).map_err(err)
}

/// Monte-Carlo estimate; returns a dict with `mean`, `stderr`, `n`, `seed`,
/// `acceptance`.
#[pyfunction]
#[pyo3(signature = (kind, v_coeffs, n, samples, seed, method="direct", mu=vec![], eps=vec![], lambda_=vec![], omega=vec![]))]
#[allow(clippy::too_many_arguments)]
fn mc_estimate<'py>(
    py: Python<'py>,
    kind: &str,
    v_coeffs: &str,
    n: usize,
    samples: usize,
    seed: u64,
    method: &str,
    mu: Vec<Complex64>,
    eps: Vec<Complex64>,
    lambda_: Vec<Complex64>,
    omega: Vec<Complex64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = spec(kind, mu, eps, lambda_, omega)?;
    let cfg = EnsembleConfig::new(v_coeffs.parse().map_err(err)?, n).map_err(err)?;
    let sampler = match method {
        "direct" => SamplerSpec::direct(seed),
        "metropolis" => SamplerSpec::metropolis(seed),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    let est = py.detach(|| estimate_correlator(&cfg, &sampler, &s, samples)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mean", est.mean)?;
    d.set_item("stderr", est.stderr)?;
    d.set_item("n", est.n_samples)?;
    d.set_item("seed", est.seed)?;
    d.set_item("acceptance", est.acceptance_rate)?;
    Ok(d)
}

/// Scaling-limit prediction at `x + offset / (N rho(x))`.
#[pyfunction]
fn dyson(kind: &str, v_coeffs: &str, n: usize, x: f64, zeta: Vec<Complex64>, eta: Vec<Complex64>) -> PyResult<Scaled> {
    let (_, t, _) = setup(v_coeffs, n, 2, None).map_err(err)?;
    let pt = ScalingPoint::new(x, zeta, eta, n);
    dyson_predict(&t, kind_of(kind)?, &pt).map(Scaled::from).map_err(err)
}

/// Equilibrium density of `V = c x^(2m)` at each point; returns `(a, psi)`.
#[pyfunction]
#[pyo3(signature = (m, xs, c=1.0))]
fn equilibrium_density(m: usize, xs: Vec<f64>, c: f64) -> PyResult<(f64, Vec<f64>)> {
    let meas = EquilibriumMeasure::new(m, c).map_err(err)?;
    Ok((meas.a, xs.iter().map(|&x| meas.psi(x)).collect()))
}

/// Identity checks; a list of `(name, residual, tolerance, passed)`.
#[pyfunction]
#[pyo3(signature = (suite="all", seed=1))]
fn identities(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let s = match suite {
        "lagrange" => Suite::Lagrange,
        "partition" => Suite::Partition,
        "schur" => Suite::Schur,
        "appendix" => Suite::Appendix,
        "all" => Suite::All,
        other => return Err(PyValueError::new_err(format!("unknown suite {other:?}"))),
    };
    let reps = py.detach(|| run_suite(s, seed)).map_err(err)?;
    Ok(reps
        .into_iter()
        .map(|r| {
            let (tol, ok) = (r.tolerance(), r.passed());
            (r.name, r.residual, tol, ok)
        })
        .collect())
}

/// Parses a complex literal such as `0.3-0.5i`.
#[pyfunction]
fn parse_complex(s: &str) -> PyResult<Complex64> {
    format::parse_complex(s).map_err(err)
}

#[pymodule(name = "charpoly")]
fn charpoly_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every binding to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CharpolyError", m.py().get_type::<CharpolyError>())?;
    m.add_class::<Scaled>()?;
    m.add_function(wrap_pyfunction!(recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(correlator, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(dyson, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_density, m)?)?;
    m.add_function(wrap_pyfunction!(identities, m)?)?;
    m.add_function(wrap_pyfunction!(parse_complex, m)?)?;
    Ok(())
}
