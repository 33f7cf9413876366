//! Dyson scaling-limit predictions for the five correlator families, the
//! two-point resolvent correlation, and convergence studies of the exact
//! finite-N values toward those predictions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{finite_density, CorrelatorKind, CorrelatorSpec};
use crate::ensemble::{EnsembleConfig, Potential, QuadratureSpec};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::kernels::{kernel_w1, limit_kernel, KernelKind};
use crate::linalg::{det_scaled, factorial, permutations, vandermonde};
use crate::orthopoly::{build_recurrence, gamma_const, RecurrenceTable};
use crate::scaled::ScaledComplex;

/// Largest allowed offset modulus.
pub const MAX_OFFSET: f64 = 5.0;
/// Bulk points satisfy `|x| < BULK a`.
pub const BULK: f64 = 0.9;

/// Bulk point `x` with offsets in units of the mean level spacing: the
/// physical arguments are `x + ζ / (Nρ(x))` and `x + η / (Nρ(x))`.
///
/// For F3 all `2K` denominator offsets go in `zeta` (`ϖ` then `ω`) and `eta`
/// is empty. For F2, F4 and F5 `zeta` holds the denominator offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub x: f64,
    pub zeta: Vec<Complex64>,
    pub eta: Vec<Complex64>,
    pub n: usize,
}

/// Which version of the limiting formulas to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitForm {
    /// The closed forms exactly as tabulated.
    Displayed,
    /// The closed forms with the normalisations that the finite-N kernels
    /// actually converge to: `S_II` enters with the opposite sign,
    /// `S_III(ζ, η)` carries the factor `e^{iπ sgn(Im ζ)(ζ - η)}`, the F4 sign
    /// is `(-)^{M(M-1)/2}`, the F5 sign is `(-)^{K+M(M-1)/2}` and the F5
    /// weight exponent is `-N(L-K)V(x)`.
    Calibrated,
}

/// Bulk data shared by every prediction at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkData {
    pub rho: f64,
    pub alpha: f64,
    pub v: f64,
    pub n_rho: f64,
}

impl BulkData {
    pub fn new(v: &Potential, n: usize, x: f64) -> Result<Self> {
        let meas = EquilibriumMeasure::from_potential(v)?;
        if x.abs() >= BULK * meas.a {
            return Err(Error::OutsideSupport { x, a: BULK * meas.a });
        }
        let rho = meas.psi(x);
        let (val, dv) = v.eval(x);
        Ok(Self {
            rho,
            alpha: dv / (2.0 * rho),
            v: val,
            n_rho: n as f64 * rho,
        })
    }
}

impl ScalingPoint {
    pub fn new(x: f64, zeta: Vec<Complex64>, eta: Vec<Complex64>, n: usize) -> Self {
        Self { x, zeta, eta, n }
    }

    fn check(&self) -> Result<()> {
        if let Some(z) = self.zeta.iter().chain(&self.eta).find(|z| z.norm() > MAX_OFFSET) {
            return Err(Error::DomainViolation(format!(
                "offset {z} exceeds the scaling window |·| <= {MAX_OFFSET}"
            )));
        }
        Ok(())
    }

    /// Physical arguments `x + ζ/(Nρ)` for a given `Nρ`.
    pub fn physical(&self, offsets: &[Complex64], n_rho: f64) -> Vec<Complex64> {
        offsets.iter().map(|z| self.x + z / n_rho).collect()
    }

    /// The correlator these offsets describe, with arguments scaled by `n_rho`.
    pub fn correlator_spec(&self, kind: CorrelatorKind, n_rho: f64) -> CorrelatorSpec {
        let z = self.physical(&self.zeta, n_rho);
        let e = self.physical(&self.eta, n_rho);
        match kind {
            CorrelatorKind::F1 => CorrelatorSpec::products(z, e),
            CorrelatorKind::F2 => CorrelatorSpec::ratios(z, e),
            CorrelatorKind::F3 => {
                let k = z.len() / 2;
                CorrelatorSpec::inverse(z[..k].to_vec(), z[k..].to_vec())
            }
            kind => CorrelatorSpec::mixed(kind, z, e),
        }
    }
}

fn off_axis(z: &[Complex64], what: &str) -> Result<()> {
    if let Some(v) = z.iter().find(|v| v.im == 0.0) {
        return Err(Error::DomainViolation(format!("{what} offset {v} lies on the real axis")));
    }
    Ok(())
}

fn s2(form: LimitForm, z: Complex64, e: Complex64) -> Result<Complex64> {
    let s = limit_kernel(KernelKind::II, z, e)?;
    Ok(match form {
        LimitForm::Displayed => s,
        LimitForm::Calibrated => -s,
    })
}

/// `(η - ζ) S_II(ζ - η)`, entire in `ζ - η`.
fn s2_times_gap(form: LimitForm, z: Complex64, e: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::DomainViolation(format!("S_II needs Im ζ ≠ 0 (ζ = {z})")));
    }
    let sgn = z.im.signum();
    let v = -(Complex64::new(0.0, sgn * PI) * (z - e)).exp();
    Ok(match form {
        LimitForm::Displayed => v,
        LimitForm::Calibrated => -v,
    })
}

fn s3(form: LimitForm, z: Complex64, e: Complex64) -> Result<Complex64> {
    let s = limit_kernel(KernelKind::III, z, e)?;
    Ok(match form {
        LimitForm::Displayed => s,
        LimitForm::Calibrated => s * (Complex64::new(0.0, z.im.signum() * PI) * (z - e)).exp(),
    })
}

fn sign(odd: bool) -> ScaledComplex {
    ScaledComplex::from_real(if odd { -1.0 } else { 1.0 })
}

fn sc(z: Complex64) -> ScaledComplex {
    ScaledComplex::from(z)
}

fn exp_real(a: f64) -> ScaledComplex {
    ScaledComplex::ONE.scale_by_log(a)
}

/// Dyson-limit prediction in the calibrated form.
pub fn dyson_predict(table: &RecurrenceTable, kind: CorrelatorKind, pt: &ScalingPoint) -> Result<ScaledComplex> {
    dyson_predict_with(table, kind, pt, LimitForm::Calibrated)
}

/// Dyson-limit prediction of `kind` at `pt`. The non-universal constants
/// `c_N` and `γ_N` come from `table`; `ρ` and `α` from the equilibrium measure.
pub fn dyson_predict_with(
    table: &RecurrenceTable,
    kind: CorrelatorKind,
    pt: &ScalingPoint,
    form: LimitForm,
) -> Result<ScaledComplex> {
    pt.check()?;
    if pt.n != table.cfg.n {
        return Err(Error::InvalidConfig(format!(
            "scaling point has N = {} but the table was built for N = {}",
            pt.n, table.cfg.n
        )));
    }
    let n = pt.n;
    if table.k_max < n {
        return Err(Error::IndexOutOfTable { index: n, depth: table.k_max });
    }
    let b = BulkData::new(&table.cfg.potential, n, pt.x)?;
    let log_c2 = table.log_c2[n];
    let gamma = gamma_const(table, n)?;
    let (z, e) = (&pt.zeta[..], &pt.eta[..]);
    let sum = |v: &[Complex64]| v.iter().sum::<Complex64>();
    let dim = |msg: String| Err(Error::DimensionMismatch(msg));
    match kind {
        CorrelatorKind::F1 => {
            let k = z.len();
            if e.len() != k {
                return dim(format!("|ζ| = {k} but |η| = {}", e.len()));
            }
            let m: Vec<Vec<ScaledComplex>> = (0..k)
                .map(|i| (0..k).map(|j| sc(limit_kernel(KernelKind::I, z[i], e[j]).unwrap())).collect())
                .collect();
            let k = k as f64;
            let pref = exp_real(k * log_c2 + k * n as f64 * b.v + k * k * b.n_rho.ln())
                * ScaledComplex::exp(b.alpha * (sum(z) + sum(e)));
            Ok(pref * det_scaled(&m) / (vandermonde(z) * vandermonde(e)))
        }
        CorrelatorKind::F2 => {
            let k = z.len();
            if e.len() != k {
                return dim(format!("|ζ| = {k} but |η| = {}", e.len()));
            }
            off_axis(z, "denominator")?;
            // prod_{i,j}(η_j - ζ_i) det[S_II(ζ_i - η_j)] expanded so that
            // coincident ζ_i = η_j stay finite
            let mut terms = Vec::new();
            for (perm, s) in permutations(k) {
                let mut t = ScaledComplex::from_real(s as f64);
                for i in 0..k {
                    t = t * sc(s2_times_gap(form, z[i], e[perm[i]])?);
                    for j in (0..k).filter(|&j| j != perm[i]) {
                        t = t * sc(e[j] - z[i]);
                    }
                }
                terms.push(t);
            }
            let pref = sign(k * (k - 1) / 2 % 2 == 1)
                * ScaledComplex::exp(-b.alpha * (sum(z) - sum(e)))
                / (vandermonde(z) * vandermonde(e));
            Ok(pref * ScaledComplex::sum(&terms))
        }
        CorrelatorKind::F3 => {
            if !e.is_empty() || z.len() % 2 != 0 || z.is_empty() {
                return dim("F3 takes 2K denominator offsets and no numerator offsets".into());
            }
            off_axis(z, "denominator")?;
            let k = z.len() / 2;
            let w: Vec<Vec<Complex64>> = (0..2 * k)
                .map(|a| {
                    (0..2 * k)
                        .map(|c| if a == c { Ok(Complex64::new(0.0, 0.0)) } else { s3(form, z[a], z[c]) })
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            let terms: Vec<ScaledComplex> = permutations(2 * k)
                .par_iter()
                .map(|(p, _)| {
                    let m: Vec<Vec<ScaledComplex>> = (0..k)
                        .map(|i| (0..k).map(|j| sc(w[p[i]][p[k + j]])).collect())
                        .collect();
                    let a: Vec<Complex64> = p[..k].iter().map(|&i| z[i]).collect();
                    let c: Vec<Complex64> = p[k..].iter().map(|&i| z[i]).collect();
                    det_scaled(&m) / (vandermonde(&a) * vandermonde(&c))
                })
                .collect();
            let kf = k as f64;
            let pref = sign(k % 2 == 1)
                * gamma.powi(k as i32)
                * exp_real(kf * kf * b.n_rho.ln() - kf * n as f64 * b.v)
                * ScaledComplex::exp(-b.alpha * sum(z))
                / ScaledComplex::from_real(factorial(2 * k));
            Ok(pref * ScaledComplex::sum(&terms))
        }
        CorrelatorKind::F4 => {
            let (m, k) = (z.len(), e.len());
            if !(k > m && m >= 1 && (k + m) % 2 == 0) {
                return dim(format!("F4 needs K > M >= 1, K + M even (K = {k}, M = {m})"));
            }
            off_axis(z, "denominator")?;
            let l = (k + m) / 2;
            let (head, tail) = e.split_at(l - m);
            let mut rows = Vec::with_capacity(l);
            for &zi in z {
                rows.push(tail.iter().map(|&t| s2(form, zi, t).map(sc)).collect::<Result<Vec<_>>>()?);
            }
            for &h in head {
                rows.push(
                    tail.iter()
                        .map(|&t| sc(limit_kernel(KernelKind::I, h, t).unwrap()))
                        .collect(),
                );
            }
            let joined: Vec<Complex64> = z.iter().chain(tail).copied().collect();
            let vand = vandermonde(&joined)
                / (vandermonde(z).powi(2) * vandermonde(tail).powi(2) * vandermonde(head));
            let s = match form {
                LimitForm::Displayed => m * (k - 1) / 2,
                LimitForm::Calibrated => m * (m - 1) / 2,
            };
            let d = (l - m) as f64;
            let pref = sign(s % 2 == 1)
                * exp_real(d * log_c2 + d * d * b.n_rho.ln() + d * n as f64 * b.v)
                * ScaledComplex::exp(-b.alpha * (sum(z) - sum(e)));
            Ok(pref * vand * det_scaled(&rows))
        }
        CorrelatorKind::F5 => {
            let (m, k) = (z.len(), e.len());
            if !(m > k && k >= 1 && (k + m) % 2 == 0) {
                return dim(format!("F5 needs M > K >= 1, K + M even (K = {k}, M = {m})"));
            }
            off_axis(z, "denominator")?;
            let p = (m - k) / 2;
            let mut terms = Vec::new();
            for (perm, _) in permutations(m) {
                let (hd, tl) = perm.split_at(p);
                let zt: Vec<Complex64> = tl.iter().map(|&i| z[i]).collect();
                let zh: Vec<Complex64> = hd.iter().map(|&i| z[i]).collect();
                let mut rows = Vec::with_capacity(k + p);
                for &ei in e {
                    rows.push(zt.iter().map(|&t| s2(form, t, ei).map(sc)).collect::<Result<Vec<_>>>()?);
                }
                for &h in &zh {
                    rows.push(zt.iter().map(|&t| s3(form, h, t).map(sc)).collect::<Result<Vec<_>>>()?);
                }
                let joined: Vec<Complex64> = e.iter().chain(&zt).copied().collect();
                terms.push(vandermonde(&joined) / (vandermonde(&zt).powi(2) * vandermonde(&zh)) * det_scaled(&rows));
            }
            let pf = p as f64;
            let (v_sign, s) = match form {
                LimitForm::Displayed => (1.0, m * (m - 1) / 2),
                LimitForm::Calibrated => (-1.0, m * (m - 1) / 2 + k),
            };
            let pref = sign(s % 2 == 1)
                * gamma.powi(p as i32)
                * exp_real(pf * pf * b.n_rho.ln() + v_sign * pf * n as f64 * b.v)
                * ScaledComplex::exp(-b.alpha * (sum(z) - sum(e)))
                / (vandermonde(e).powi(2) * ScaledComplex::from_real(factorial(m)));
            Ok(pref * ScaledComplex::sum(&terms))
        }
        CorrelatorKind::General => Err(Error::DimensionMismatch(
            "the general formula has no separate scaling limit".into(),
        )),
    }
}

/// `S_2 = [πρ]^2 [1 - 2i sin(πd) e^{-iπd} / (πd)^2]`, `d = η_2 - η_1`.
/// Valid where `α(x) = 0`; elsewhere the leading term gains `(αρ)^2`.
pub fn two_point_resolvent(rho: f64, eta1: Complex64, eta2: Complex64) -> Result<Complex64> {
    if !(eta1.im > 0.0 && eta2.im < 0.0) {
        return Err(Error::DomainViolation(format!(
            "needs Im η_1 > 0 > Im η_2 (η_1 = {eta1}, η_2 = {eta2})"
        )));
    }
    let d = eta2 - eta1;
    let pd = PI * d;
    let i = Complex64::i();
    let corr = if pd.norm() < 1e-6 {
        // 2i sin(πd) e^{-iπd} / (πd)^2 ~ 2i/(πd) + 2
        2.0 * i / pd + 2.0 - 4.0 * i * pd / 3.0
    } else {
        2.0 * i * pd.sin() * (-i * pd).exp() / (pd * pd)
    };
    Ok((PI * rho).powi(2) * (1.0 - corr))
}

/// The same quantity as [`two_point_resolvent`] obtained from the F2 (K = 2)
/// prediction: `ρ^2 ∂²_{η_1 η_2} F_II(ζ, η)` at `ζ = η`, by central
/// differences with Richardson extrapolation over steps `h` and `h/2`.
pub fn two_point_resolvent_numeric(
    table: &RecurrenceTable,
    x: f64,
    eta1: Complex64,
    eta2: Complex64,
    h: f64,
) -> Result<Complex64> {
    two_point_resolvent(1.0, eta1, eta2)?;
    let n = table.cfg.n;
    let b = BulkData::new(&table.cfg.potential, n, x)?;
    let f = |a: Complex64, c: Complex64| -> Result<Complex64> {
        let pt = ScalingPoint::new(x, vec![eta1, eta2], vec![a, c], n);
        Ok(dyson_predict(table, CorrelatorKind::F2, &pt)?.to_complex())
    };
    let mixed = |h: f64| -> Result<Complex64> {
        Ok((f(eta1 + h, eta2 + h)? - f(eta1 + h, eta2 - h)? - f(eta1 - h, eta2 + h)?
            + f(eta1 - h, eta2 - h)?)
            / (4.0 * h * h))
    };
    let d1 = mixed(h)?;
    let d2 = mixed(h / 2.0)?;
    Ok(b.rho * b.rho * (4.0 * d2 - d1) / 3.0)
}

/// Exact finite-N `N^{-2} <Tr (E - H)^{-1} Tr (E' - H)^{-1}>` at
/// `E = x + η_1/(Nρ)`, `E' = x + η_2/(Nρ)`, by differentiating the exact K = 2
/// ratio correlator in the numerator arguments.
pub fn two_point_resolvent_finite(
    table: &RecurrenceTable,
    x: f64,
    n_rho: f64,
    eta1: Complex64,
    eta2: Complex64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    two_point_resolvent(1.0, eta1, eta2)?;
    let cfg = &table.cfg;
    let e1 = x + eta1 / n_rho;
    let e2 = x + eta2 / n_rho;
    let f = |a: Complex64, c: Complex64| -> Result<Complex64> {
        Ok(CorrelatorSpec::ratios(vec![e1, e2], vec![a, c])
            .evaluate(table, cfg, q)?
            .to_complex())
    };
    let mixed = |h: f64| -> Result<Complex64> {
        Ok((f(e1 + h, e2 + h)? - f(e1 + h, e2 - h)? - f(e1 - h, e2 + h)? + f(e1 - h, e2 - h)?)
            / (4.0 * h * h))
    };
    let h = 1e-2 / n_rho;
    let d = (4.0 * mixed(h / 2.0)? - mixed(h)?) / 3.0;
    let n = cfg.n as f64;
    Ok(d / (n * n))
}

/// What a convergence study compares with its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyTarget {
    Correlator(CorrelatorKind),
    /// `W_{I,N}(λ, μ)` against `c_N^2 Nρ e^{NV(x)} e^{α(ζ+η)} S_I(ζ - η)`.
    KernelW1,
}

/// Density used to scale offsets into physical arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgScaling {
    /// `ρ = K_N(x, x) / N`.
    FiniteN,
    /// `ρ = ψ(x)`.
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub exact: ScaledComplex,
    pub predicted: ScaledComplex,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Minus the least-squares slope of `log rel_err` against `log N`.
    pub fitted_order: f64,
}

/// `W_{I,N}` prediction from the kernel table.
fn kernel_w1_prediction(table: &RecurrenceTable, pt: &ScalingPoint) -> Result<ScaledComplex> {
    let n = pt.n;
    let b = BulkData::new(&table.cfg.potential, n, pt.x)?;
    let (z, e) = (pt.zeta[0], pt.eta[0]);
    Ok(ScaledComplex::from(limit_kernel(KernelKind::I, z, e)?)
        .mul_complex((b.alpha * (z + e)).exp())
        .scale_by_log(table.log_c2[n] + b.n_rho.ln() + n as f64 * b.v))
}

/// Least-squares slope of `log y` against `log x`, negated.
pub fn fitted_order(ns: &[usize], errs: &[f64]) -> f64 {
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    -sxy / sxx
}

/// For each `N` build the recurrence, evaluate the exact value at scaled
/// arguments and divide by the calibrated prediction (which always uses the
/// equilibrium density in its prefactors).
pub fn convergence_study(
    v: &Potential,
    target: StudyTarget,
    template: &ScalingPoint,
    n_list: &[usize],
    scaling: ArgScaling,
    q: &QuadratureSpec,
) -> Result<ConvergenceStudy> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("N list must be ascending with at least two entries".into()));
    }
    let rows: Vec<ConvergenceRow> = n_list
        .par_iter()
        .map(|&n| {
            let cfg = EnsembleConfig::new(v.clone(), n)?;
            let extra = template.zeta.len() + template.eta.len() + 2;
            let table = build_recurrence(&cfg, n + extra, q)?;
            let pt = ScalingPoint { n, ..template.clone() };
            let n_rho = match scaling {
                ArgScaling::FiniteN => n as f64 * finite_density(&table, &cfg, pt.x)?,
                ArgScaling::Limit => BulkData::new(v, n, pt.x)?.n_rho,
            };
            let (exact, predicted) = match target {
                StudyTarget::KernelW1 => {
                    if pt.zeta.len() != 1 || pt.eta.len() != 1 {
                        return Err(Error::DimensionMismatch("kernel study takes one ζ and one η".into()));
                    }
                    let l = pt.x + pt.zeta[0] / n_rho;
                    let m = pt.x + pt.eta[0] / n_rho;
                    (kernel_w1(&table, n, l, m)?, kernel_w1_prediction(&table, &pt)?)
                }
                StudyTarget::Correlator(kind) => {
                    let spec = pt.correlator_spec(kind, n_rho);
                    (spec.evaluate(&table, &cfg, q)?, dyson_predict(&table, kind, &pt)?)
                }
            };
            let rel_err = ((exact / predicted).to_complex() - 1.0).norm();
            let abs_err = exact.sub(&predicted).abs();
            Ok(ConvergenceRow { n, exact, predicted, abs_err, rel_err })
        })
        .collect::<Result<_>>()?;
    let errs: Vec<f64> = rows.iter().map(|r| r.rel_err).collect();
    Ok(ConvergenceStudy {
        fitted_order: fitted_order(n_list, &errs),
        rows,
    })
}
