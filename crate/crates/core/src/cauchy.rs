//! Cauchy transforms `h_k(ε) = (2πi)^{-1} ∫ e^{-NV(x)} π_k(x) / (x - ε) dx`.
//!
//! The defining integrand oscillates in sign and for large `N` the integral is
//! exponentially smaller than the integral of its modulus. Since
//! `(π_k(x) - π_k(ε)) / (x - ε)` has degree `k - 1`, orthogonality gives
//!
//! `∫ w π_k(x)^2 / (x - ε) dx = 2πi π_k(ε) h_k(ε)`,
//!
//! so `h_k = c_k^2 J_k / (2πi π_k(ε))` with `J_k = ∫ w q_k^2 / (x - ε) dx`.
//! `J_k` has a positive weight and no cancellation, and it is what the panel
//! quadrature computes. Derivatives follow from
//! `J_k^{(j)} / j! = ∫ w q_k^2 / (x - ε)^{j+1} dx` and series division.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ensemble::{EnsembleConfig, QuadratureSpec};
use crate::error::{Error, Result};
use crate::orthopoly::RecurrenceTable;
use crate::quadrature::{composite, refine_near, uniform_breaks};
use crate::scaled::ScaledComplex;

/// Relative offset from the real axis below which evaluation is refused.
pub const MIN_IM_FRACTION: f64 = 1e-4;

fn check_point(table: &RecurrenceTable, eps: Complex64) -> Result<()> {
    if !eps.re.is_finite() || !eps.im.is_finite() {
        return Err(Error::DomainViolation(format!("non-finite argument {eps}")));
    }
    let guard = MIN_IM_FRACTION * table.support_scale();
    if eps.im.abs() < guard {
        return Err(Error::OnRealAxis(format!(
            "{eps} (|Im| must be at least {guard:e})"
        )));
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

/// `J_k^{[j]}` for each requested `k` and `j = 0..=order`, with the matching
/// L1 norms, on a fixed panel set.
fn j_integrals(
    table: &RecurrenceTable,
    ks: &[usize],
    eps: Complex64,
    order: usize,
    base_panels: usize,
    max_panels: usize,
) -> (Vec<Vec<Complex64>>, Vec<Vec<f64>>) {
    let t = table.cutoff;
    let mut breaks = uniform_breaks(-t, t, base_panels);
    if eps.re.abs() < t + eps.im.abs() {
        breaks = refine_near(&breaks, eps.re.clamp(-t, t), eps.im.abs(), max_panels);
    }
    let (xs, ws) = composite(&breaks);
    let k_top = *ks.iter().max().unwrap();
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); order + 1]; ks.len()];
    let mut l1 = vec![vec![0.0; order + 1]; ks.len()];
    for (x, w) in xs.iter().zip(&ws) {
        let lw = table.cfg.log_weight(*x);
        let q = table.orthonormal_real(k_top, *x);
        let r = Complex64::new(1.0, 0.0) / (Complex64::new(*x, 0.0) - eps);
        let rn = r.norm();
        for (i, &k) in ks.iter().enumerate() {
            let dens = w * (lw + 2.0 * q[k].0).exp();
            if dens == 0.0 {
                continue;
            }
            let mut p = r;
            let mut pn = rn;
            for j in 0..=order {
                acc[i][j] += dens * p;
                l1[i][j] += dens * pn;
                p *= r;
                pn *= rn;
            }
        }
    }
    (acc, l1)
}

/// Taylor coefficients `h_k^{(j)}(ε) / j!`, `j = 0..=order`, for each `k`.
pub fn cauchy_taylor(
    table: &RecurrenceTable,
    ks: &[usize],
    eps: Complex64,
    order: usize,
    q: &QuadratureSpec,
) -> Result<Vec<Vec<ScaledComplex>>> {
    check_point(table, eps)?;
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    for &k in ks {
        if k >= table.k_max {
            return Err(Error::IndexOutOfTable {
                index: k,
                depth: table.k_max,
            });
        }
    }
    let mut panels = (table.k_max / 4).clamp(16, q.max_panels.max(1));
    let (mut prev, _) = j_integrals(table, ks, eps, order, panels, q.max_panels * 4);
    let j_vals = loop {
        let next = panels * 2;
        if next > q.max_panels {
            return Err(Error::NonConvergedQuadrature {
                tol: q.tol,
                panels,
                context: format!("Cauchy transform at {eps}"),
            });
        }
        let (cur, l1) = j_integrals(table, ks, eps, order, next, q.max_panels * 4);
        let ok = cur.iter().zip(&prev).zip(&l1).all(|((c, p), n)| {
            c.iter()
                .zip(p)
                .zip(n)
                .all(|((a, b), s)| (a - b).norm() <= q.tol * s)
        });
        panels = next;
        prev = cur;
        if ok {
            break prev;
        }
    };

    let prefactor = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let k_top = *ks.iter().max().unwrap();
    let pis = table.taylor_all(k_top, eps, order)?;
    let mut out = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let p = &pis[k];
        let p0 = p[0];
        let ratio: Vec<Complex64> = p.iter().map(|pj| (*pj / p0).to_complex()).collect();
        let jv = &j_vals[i];
        let mut h = vec![Complex64::new(0.0, 0.0); order + 1];
        for n in 0..=order {
            let mut v = jv[n];
            for m in 1..=n {
                v -= ratio[m] * h[n - m];
            }
            h[n] = v;
        }
        let scale = ScaledComplex::from_parts(table.log_c2[k], Complex64::new(1.0, 0.0)) / p0;
        out.push(
            h.into_iter()
                .map(|v| scale * ScaledComplex::from(prefactor * v))
                .collect(),
        );
    }
    Ok(out)
}

pub fn eval_cauchy(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    k: usize,
    eps: Complex64,
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    Ok(cauchy_taylor(table, &[k], eps, 0, q)?[0][0])
}

/// `h_k(ε)` and `h_k'(ε)`.
pub fn eval_cauchy_with_derivative(
    table: &RecurrenceTable,
    k: usize,
    eps: Complex64,
    q: &QuadratureSpec,
) -> Result<(ScaledComplex, ScaledComplex)> {
    let t = cauchy_taylor(table, &[k], eps, 1, q)?;
    Ok((t[0][0], t[0][1]))
}

/// `out[i][j] = h_{k_list[j]}(eps_list[i])`. Errors name the failing entry.
pub fn cauchy_batch(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    k_list: &[usize],
    eps_list: &[Complex64],
    q: &QuadratureSpec,
) -> Result<Vec<Vec<ScaledComplex>>> {
    check_cfg(table, cfg)?;
    eps_list
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            cauchy_taylor(table, k_list, e, 0, q)
                .map(|v| v.into_iter().map(|mut r| r.remove(0)).collect())
                .map_err(|err| annotate(err, i))
        })
        .collect()
}

fn annotate(err: Error, i: usize) -> Error {
    match err {
        Error::OnRealAxis(s) => Error::OnRealAxis(format!("entry {i}: {s}")),
        Error::NonConvergedQuadrature {
            tol,
            panels,
            context,
        } => Error::NonConvergedQuadrature {
            tol,
            panels,
            context: format!("entry {i}: {context}"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Potential;
    use crate::orthopoly::{build_recurrence, eval_monic, gamma_const};
    use crate::quadrature::GaussLegendre;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hermite1() -> &'static RecurrenceTable {
        static T: OnceLock<RecurrenceTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = EnsembleConfig::new(Potential::gaussian(), 1).unwrap();
            build_recurrence(&cfg, 12, &QuadratureSpec::default()).unwrap()
        })
    }

    fn quartic50() -> &'static RecurrenceTable {
        static T: OnceLock<RecurrenceTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = EnsembleConfig::new(Potential::monomial(2, 1.0).unwrap(), 50).unwrap();
            build_recurrence(&cfg, 52, &QuadratureSpec::default()).unwrap()
        })
    }

    fn h(t: &RecurrenceTable, k: usize, z: Complex64) -> ScaledComplex {
        eval_cauchy(t, &t.cfg, k, z, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn h0_matches_direct_quadrature() {
        let t = hermite1();
        let z = c(0.0, 1.0);
        let g = GaussLegendre::new(30);
        let mut s = c(0.0, 0.0);
        for i in 0..800 {
            let a = -40.0 + 0.1 * i as f64;
            let h = 0.05;
            let m = a + h;
            for (x, w) in g.nodes.iter().zip(&g.weights) {
                let xx = m + h * x;
                s += w * h * (-xx * xx / 2.0).exp() / (c(xx, 0.0) - z);
            }
        }
        let want = s / c(0.0, 2.0 * PI);
        let got = h(t, 0, z).to_complex();
        assert!((got - want).norm() < 1e-12 * want.norm(), "{got} vs {want}");
    }

    #[test]
    fn conjugation_symmetry() {
        // the 1/(2πi) prefactor flips sign under conjugation
        let t = hermite1();
        for k in 0..6 {
            let z = c(0.4, 0.7);
            let a = h(t, k, z);
            let b = h(t, k, z.conj());
            assert!(a.rel_diff(&-b.conj()) < 1e-13);
        }
    }

    #[test]
    fn normalization_at_infinity() {
        let t = hermite1();
        let z = c(0.0, 100.0);
        let v = (gamma_const(t, 0).unwrap() * h(t, 0, z)).to_complex();
        let want = Complex64::new(1.0, 0.0) / z;
        assert!((v - want).norm() < 2e-2 * want.norm());
    }

    #[test]
    fn rejects_axis() {
        let t = hermite1();
        assert!(matches!(
            eval_cauchy(t, &t.cfg, 0, c(0.3, 0.0), &QuadratureSpec::default()),
            Err(Error::OnRealAxis(_))
        ));
    }

    #[test]
    fn batch_matches_single() {
        let t = hermite1();
        let q = QuadratureSpec::default();
        let z = c(0.3, 2.0);
        let b = cauchy_batch(t, &t.cfg, &[0, 1, 2, 3, 4, 5], &[z, z.conj()], &q).unwrap();
        for k in 0..6 {
            assert!(b[0][k].rel_diff(&h(t, k, z)) < 1e-13);
            assert!(b[1][k].rel_diff(&-b[0][k].conj()) < 1e-13);
        }
        // three-term recurrence for second-kind functions
        for k in 1..5 {
            let lhs = b[0][k + 1]
                .sub(&b[0][k].mul_complex(z - t.a[k]))
                .add(&b[0][k - 1].mul_complex(c(t.b[k], 0.0)));
            assert!(lhs.log_mag - b[0][k].log_mag < (1e-10f64).ln());
        }
        let err = cauchy_batch(t, &t.cfg, &[0], &[z, c(1.0, 0.0)], &q).unwrap_err();
        assert!(err.to_string().contains("entry 1"));
    }

    #[test]
    fn det_y_identity_large_n() {
        let t = quartic50();
        let n = 50;
        for z in [c(0.1, 0.5), c(-0.4, 0.1), c(0.9, -0.3), c(2.0, 1.0)] {
            let g = gamma_const(t, n - 1).unwrap();
            let (pn, _) = eval_monic(t, n, z).unwrap();
            let (pn1, _) = eval_monic(t, n - 1, z).unwrap();
            let hn = h(t, n, z);
            let hn1 = h(t, n - 1, z);
            let d = (pn * g * hn1).sub(&(hn * g * pn1));
            assert!((d.to_complex() - 1.0).norm() < 1e-8, "z={z}: {:?}", d);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let t = quartic50();
        let q = QuadratureSpec::default();
        let z = c(0.2, 0.3);
        let (_, d) = eval_cauchy_with_derivative(t, 49, z, &q).unwrap();
        let step = 1e-5;
        let fd = h(t, 49, z + step)
            .sub(&h(t, 49, z - step))
            .scale_by_log(-(2.0 * step).ln());
        assert!(fd.rel_diff(&d) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn det_y_random(re in -3f64..3.0, im in 0.1f64..3.0, sign in proptest::bool::ANY) {
            let t = hermite1();
            let z = c(re, if sign { im } else { -im });
            let n = 8;
            let g = gamma_const(t, n - 1).unwrap();
            let (pn, _) = eval_monic(t, n, z).unwrap();
            let (pn1, _) = eval_monic(t, n - 1, z).unwrap();
            let d = (pn * g * h(t, n - 1, z)).sub(&(h(t, n, z) * g * pn1));
            prop_assert!((d.to_complex() - 1.0).norm() < 1e-8);
        }
    }
}
