//! Finite-N integrable kernels `W_I`, `W_II`, `W_III`, the classical kernel
//! `K_N`, and the limiting kernels `S_I`, `S_II`, `S_III`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::cauchy_taylor;
use crate::ensemble::{EnsembleConfig, QuadratureSpec};
use crate::error::{Error, Result};
use crate::orthopoly::RecurrenceTable;
use crate::scaled::ScaledComplex;

/// `|λ - μ| < COINCIDENCE * (1 + |λ|)` selects the confluent branch.
pub const COINCIDENCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    I,
    II,
    III,
}

pub fn coincident(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < COINCIDENCE * (1.0 + a.norm())
}

fn check_index(table: &RecurrenceTable, n: usize) -> Result<()> {
    if n == 0 || n >= table.k_max {
        return Err(Error::IndexOutOfTable {
            index: n,
            depth: table.k_max,
        });
    }
    Ok(())
}

fn check_cfg(table: &RecurrenceTable, cfg: &EnsembleConfig) -> Result<()> {
    if &table.cfg != cfg {
        return Err(Error::InvalidConfig(
            "recurrence table was built for a different ensemble".into(),
        ));
    }
    Ok(())
}

/// `[π_n(λ) π_{n-1}(μ) - π_n(μ) π_{n-1}(λ)] / (λ - μ)`, with the confluent
/// value `π_n' π_{n-1} - π_n π_{n-1}'` on the diagonal.
pub fn kernel_w1(
    table: &RecurrenceTable,
    n: usize,
    lambda: Complex64,
    mu: Complex64,
) -> Result<ScaledComplex> {
    check_index(table, n)?;
    let tl = table.taylor_all(n, lambda, 1)?;
    if coincident(lambda, mu) {
        return Ok((tl[n][1] * tl[n - 1][0]).sub(&(tl[n][0] * tl[n - 1][1])));
    }
    let tm = table.taylor_all(n, mu, 0)?;
    let num = (tl[n][0] * tm[n - 1][0]).sub(&(tm[n][0] * tl[n - 1][0]));
    Ok(num / ScaledComplex::from(lambda - mu))
}

/// Christoffel-Darboux form `c_{n-1}^2 sum_{l<n} q_l(λ) q_l(μ)`.
pub fn kernel_w1_cd(
    table: &RecurrenceTable,
    n: usize,
    lambda: Complex64,
    mu: Complex64,
) -> Result<ScaledComplex> {
    check_index(table, n)?;
    let tl = table.taylor_all(n - 1, lambda, 0)?;
    let tm = table.taylor_all(n - 1, mu, 0)?;
    let terms: Vec<ScaledComplex> = (0..n)
        .map(|l| (tl[l][0] * tm[l][0]).scale_by_log(table.log_c2[n - 1] - table.log_c2[l]))
        .collect();
    Ok(ScaledComplex::sum(&terms))
}

/// `[h_n(ε) π_{n-1}(μ) - h_{n-1}(ε) π_n(μ)] / (ε - μ)`.
pub fn kernel_w2(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    n: usize,
    eps: Complex64,
    mu: Complex64,
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    check_index(table, n)?;
    if coincident(eps, mu) {
        return Err(Error::CoincidentArguments(format!(
            "W_II has a pole at ε = μ = {eps}"
        )));
    }
    Ok(w2_numerator(table, n, eps, mu, q)? / ScaledComplex::from(eps - mu))
}

/// Numerator of `W_II`; finite at `ε = μ`.
pub fn w2_numerator(
    table: &RecurrenceTable,
    n: usize,
    eps: Complex64,
    mu: Complex64,
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    let h = cauchy_taylor(table, &[n - 1, n], eps, 0, q)?;
    let p = table.taylor_all(n, mu, 0)?;
    Ok((h[1][0] * p[n - 1][0]).sub(&(h[0][0] * p[n][0])))
}

/// `[h_n(ε) h_{n-1}(ω) - h_{n-1}(ε) h_n(ω)] / (ε - ω)`; on the diagonal the
/// confluent value `h_n' h_{n-1} - h_n h_{n-1}'` uses the analytic derivative
/// of the Cauchy transform.
pub fn kernel_w3(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    n: usize,
    eps: Complex64,
    omega: Complex64,
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    check_index(table, n)?;
    if coincident(eps, omega) {
        let h = cauchy_taylor(table, &[n - 1, n], eps, 1, q)?;
        return Ok((h[1][1] * h[0][0]).sub(&(h[1][0] * h[0][1])));
    }
    let he = cauchy_taylor(table, &[n - 1, n], eps, 0, q)?;
    let ho = cauchy_taylor(table, &[n - 1, n], omega, 0, q)?;
    let num = (he[1][0] * ho[0][0]).sub(&(he[0][0] * ho[1][0]));
    Ok(num / ScaledComplex::from(eps - omega))
}

/// `K_N(x, y) = e^{-N(V(x)+V(y))/2} W_{I,N}(x, y) / c_{N-1}^2`.
pub fn kernel_kn(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    n: usize,
    x: f64,
    y: f64,
) -> Result<f64> {
    check_cfg(table, cfg)?;
    let w = kernel_w1(table, n, Complex64::new(x, 0.0), Complex64::new(y, 0.0))?;
    let s = w.scale_by_log(0.5 * (cfg.log_weight(x) + cfg.log_weight(y)) - table.log_c2[n - 1]);
    Ok(s.to_complex().re)
}

/// Table of limiting kernels evaluated at `(ζ, η)`.
pub fn limit_kernel(kind: KernelKind, zeta: Complex64, eta: Complex64) -> Result<Complex64> {
    let d = zeta - eta;
    match kind {
        KernelKind::I => Ok(sinc(d)),
        KernelKind::II => {
            if zeta.im == 0.0 {
                return Err(Error::DomainViolation(format!(
                    "S_II needs Im ζ ≠ 0 (ζ = {zeta})"
                )));
            }
            let s = if zeta.im > 0.0 { 1.0 } else { -1.0 };
            Ok((Complex64::new(0.0, s * PI) * d).exp() / d)
        }
        KernelKind::III => {
            if zeta.im == 0.0 || eta.im == 0.0 {
                return Err(Error::DomainViolation(format!(
                    "S_III needs Im ζ ≠ 0 and Im η ≠ 0 (ζ = {zeta}, η = {eta})"
                )));
            }
            if zeta.im > 0.0 && eta.im < 0.0 {
                Ok(1.0 / d)
            } else if zeta.im < 0.0 && eta.im > 0.0 {
                Ok(-1.0 / d)
            } else {
                Ok(Complex64::new(0.0, 0.0))
            }
        }
    }
}

/// `sin(π z) / (π z)`, continuous at 0.
pub fn sinc(z: Complex64) -> Complex64 {
    let pz = z * PI;
    if pz.norm() < 1e-4 {
        let p2 = pz * pz;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        pz.sin() / pz
    }
}
