//! Monic orthogonal polynomials for `exp(-N V(x))` via their three-term
//! recurrence `π_{k+1} = (x - a_k) π_k - b_k π_{k-1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{truncation_point, EnsembleConfig, QuadratureSpec};
use crate::error::{Error, Result};
use crate::quadrature::{composite, uniform_breaks};
use crate::scaled::ScaledComplex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub a: Vec<f64>,
    /// `b[0]` is unused and stored as zero.
    pub b: Vec<f64>,
    pub log_c2: Vec<f64>,
    pub k_max: usize,
    pub cfg: EnsembleConfig,
    /// Half-width of the truncated integration interval.
    pub cutoff: f64,
}

const INITIAL_PANELS: usize = 8;

/// Stieltjes procedure in Lanczos form: the discrete measure
/// `sum_i w_i δ(x - x_i)` from composite Gauss-Legendre panels on `[-T, T]`
/// is fed to a Lanczos iteration on `diag(x_i)` with full reorthogonalisation.
/// The panel count doubles until all coefficients agree to `q.tol`.
pub fn build_recurrence(
    cfg: &EnsembleConfig,
    k_max: usize,
    q: &QuadratureSpec,
) -> Result<RecurrenceTable> {
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    let t = truncation_point(cfg, k_max, q);
    let mut panels = INITIAL_PANELS.max(k_max / 4);
    let mut prev = discretized_stieltjes(cfg, k_max, t, panels)?;
    loop {
        let next_panels = panels * 2;
        if next_panels > q.max_panels {
            return Err(Error::NonConvergedQuadrature {
                tol: q.tol,
                panels,
                context: "recurrence coefficients".into(),
            });
        }
        let cur = discretized_stieltjes(cfg, k_max, t, next_panels)?;
        let diff = coefficient_change(&prev, &cur);
        prev = cur;
        panels = next_panels;
        if diff <= q.tol {
            break;
        }
    }
    let (a, b, log_c0) = prev;
    for (k, &bk) in b.iter().enumerate().skip(1) {
        if !(bk > 0.0) {
            return Err(Error::LostPositivity { k, value: bk });
        }
    }
    let mut log_c2 = Vec::with_capacity(k_max);
    log_c2.push(log_c0);
    for k in 1..k_max {
        log_c2.push(log_c2[k - 1] + b[k].ln());
    }
    Ok(RecurrenceTable {
        a,
        b,
        log_c2,
        k_max,
        cfg: cfg.clone(),
        cutoff: t,
    })
}

fn coefficient_change(p: &(Vec<f64>, Vec<f64>, f64), c: &(Vec<f64>, Vec<f64>, f64)) -> f64 {
    let mut d = (p.2 - c.2).abs();
    for k in 0..p.0.len() {
        let scale = c.1.get(k + 1).copied().unwrap_or(c.1[k]).abs().sqrt().max(1e-300);
        d = d.max((p.0[k] - c.0[k]).abs() / scale);
        if k >= 1 {
            d = d.max((p.1[k] - c.1[k]).abs() / c.1[k].abs().max(1e-300));
        }
    }
    d
}

type Coefficients = (Vec<f64>, Vec<f64>, f64);

fn discretized_stieltjes(
    cfg: &EnsembleConfig,
    k_max: usize,
    t: f64,
    panels: usize,
) -> Result<Coefficients> {
    let (xs, ws) = composite(&uniform_breaks(-t, t, panels));
    let lw: Vec<f64> = xs.iter().map(|&x| cfg.log_weight(x)).collect();
    let l_max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ws
        .iter()
        .zip(&lw)
        .map(|(wi, l)| wi * (l - l_max).exp())
        .collect();
    let m0: f64 = w.iter().sum();
    let n = xs.len();
    if k_max > n {
        return Err(Error::NonConvergedQuadrature {
            tol: 0.0,
            panels,
            context: "fewer nodes than polynomials".into(),
        });
    }

    let mut a = vec![0.0f64; k_max];
    let mut b = vec![0.0f64; k_max];
    // u_k = sqrt(w) q_k is a unit vector; the Lanczos basis
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    let u0: Vec<f64> = w.iter().map(|wi| (wi / m0).sqrt()).collect();
    basis.push(u0);
    for k in 0..k_max {
        let uk = &basis[k];
        a[k] = uk.iter().zip(&xs).map(|(u, x)| x * u * u).sum();
        if k + 1 == k_max {
            break;
        }
        let mut r: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = (xs[i] - a[k]) * uk[i];
                if k > 0 {
                    v -= b[k].sqrt() * basis[k - 1][i];
                }
                v
            })
            .collect();
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for u in &basis {
                let p: f64 = u.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, ui) in r.iter_mut().zip(u) {
                    *ri -= p * ui;
                }
            }
        }
        let beta2: f64 = r.iter().map(|v| v * v).sum();
        if !(beta2 > 0.0) {
            return Err(Error::LostPositivity {
                k: k + 1,
                value: beta2,
            });
        }
        let beta = beta2.sqrt();
        b[k + 1] = beta2;
        basis.push(r.into_iter().map(|v| v / beta).collect());
    }
    Ok((a, b, l_max + m0.ln()))
}

impl RecurrenceTable {
    fn check(&self, k: usize) -> Result<()> {
        if k >= self.k_max {
            Err(Error::IndexOutOfTable {
                index: k,
                depth: self.k_max,
            })
        } else {
            Ok(())
        }
    }

    /// Scale of the orthogonality measure, `2 sqrt(max b_k)` (at least 1).
    pub fn support_scale(&self) -> f64 {
        let bmax = self.b.iter().cloned().fold(0.0, f64::max);
        (2.0 * bmax.sqrt()).max(1.0)
    }

    /// `log c_k` (half of `log_c2`).
    pub fn log_c(&self, k: usize) -> f64 {
        0.5 * self.log_c2[k]
    }

    /// Taylor coefficients `π_k^{(j)}(z) / j!` for `j = 0..=order` and every
    /// `k = 0..=k_top`, sharing a common scale per `k`.
    pub fn taylor_all(
        &self,
        k_top: usize,
        z: Complex64,
        order: usize,
    ) -> Result<Vec<Vec<ScaledComplex>>> {
        self.check(k_top)?;
        let m = order + 1;
        let mut out = Vec::with_capacity(k_top + 1);
        let mut prev = vec![Complex64::new(0.0, 0.0); m];
        let mut cur = vec![Complex64::new(0.0, 0.0); m];
        cur[0] = Complex64::new(1.0, 0.0);
        let mut log_scale = 0.0;
        out.push(to_scaled(&cur, log_scale));
        for k in 0..k_top {
            let mut next = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                let mut v = (z - self.a[k]) * cur[j];
                if j > 0 {
                    v += cur[j - 1];
                }
                if k > 0 {
                    v -= self.b[k] * prev[j];
                }
                next[j] = v;
            }
            prev = cur;
            cur = next;
            let big = cur.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if big > 1e100 || (big < 1e-100 && big > 0.0) {
                let s = big.ln();
                let f = 1.0 / big;
                for c in cur.iter_mut().chain(prev.iter_mut()) {
                    *c *= f;
                }
                log_scale += s;
            }
            out.push(to_scaled(&cur, log_scale));
        }
        Ok(out)
    }

    /// Taylor coefficients of `π_k` at `z` up to `order`.
    pub fn taylor(&self, k: usize, z: Complex64, order: usize) -> Result<Vec<ScaledComplex>> {
        let mut all = self.taylor_all(k, z, order)?;
        Ok(all.pop().unwrap())
    }

    /// Orthonormal `q_k(x) = π_k(x) / c_k` for `k = 0..=k_top` at real `x`,
    /// returned as `(log|q_k|, sign)` via the normalised recurrence.
    pub fn orthonormal_real(&self, k_top: usize, x: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(k_top + 1);
        let mut prev = 0.0;
        let mut cur = 1.0;
        let mut log_scale = -self.log_c(0);
        out.push((log_scale, 1.0));
        for k in 0..k_top {
            let beta_next = self.b[k + 1].sqrt();
            let mut v = (x - self.a[k]) * cur;
            if k > 0 {
                v -= self.b[k].sqrt() * prev;
            }
            v /= beta_next;
            prev = cur;
            cur = v;
            let big = cur.abs().max(prev.abs());
            if big > 1e100 || (big < 1e-100 && big > 0.0) {
                prev /= big;
                cur /= big;
                log_scale += big.ln();
            }
            if cur == 0.0 {
                out.push((f64::NEG_INFINITY, 1.0));
            } else {
                out.push((log_scale + cur.abs().ln(), cur.signum()));
            }
        }
        out
    }
}

fn to_scaled(v: &[Complex64], log_scale: f64) -> Vec<ScaledComplex> {
    v.iter()
        .map(|&c| ScaledComplex::from_scaled(c, log_scale))
        .collect()
}

/// `(π_k(z), π_k'(z))`.
pub fn eval_monic(
    table: &RecurrenceTable,
    k: usize,
    z: Complex64,
) -> Result<(ScaledComplex, ScaledComplex)> {
    let t = table.taylor(k, z, 1)?;
    Ok((t[0], t[1]))
}

/// `γ_k = -2πi / c_k^2`.
pub fn gamma_const(table: &RecurrenceTable, k: usize) -> Result<ScaledComplex> {
    table.check(k)?;
    Ok(ScaledComplex {
        log_mag: (2.0 * PI).ln() - table.log_c2[k],
        phase: Complex64::new(0.0, -1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Potential;
    use crate::quadrature::GaussLegendre;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn hermite(n: usize, k_max: usize) -> RecurrenceTable {
        let cfg = EnsembleConfig::new(Potential::gaussian(), n).unwrap();
        build_recurrence(&cfg, k_max, &QuadratureSpec::default()).unwrap()
    }

    fn quartic() -> &'static RecurrenceTable {
        static T: OnceLock<RecurrenceTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = EnsembleConfig::new(Potential::monomial(2, 1.0).unwrap(), 12).unwrap();
            build_recurrence(&cfg, 30, &QuadratureSpec::default()).unwrap()
        })
    }

    #[test]
    fn hermite_n1() {
        let t = hermite(1, 10);
        for k in 0..10 {
            assert!(t.a[k].abs() < 1e-12, "a_{k} = {}", t.a[k]);
        }
        for k in 1..10 {
            assert!((t.b[k] - k as f64).abs() < 1e-11 * k as f64, "b_{k} = {}", t.b[k]);
        }
        assert!((t.log_c2[0] - (2.0 * PI).sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn hermite_n4() {
        let t = hermite(4, 10);
        for k in 1..10 {
            assert!((t.b[k] - k as f64 / 4.0).abs() < 1e-11);
            assert!(t.a[k].abs() < 1e-12);
        }
    }

    #[test]
    fn c0_matches_independent_quadrature() {
        // c_0^2 = ∫ exp(-x^2/2) dx by a single wide panel set
        let g = GaussLegendre::new(40);
        let s: f64 = (0..40)
            .map(|i| {
                let a = -20.0 + i as f64;
                g.integrate(a, a + 1.0, |x| (-x * x / 2.0).exp())
            })
            .sum();
        let t = hermite(1, 4);
        assert!((t.log_c2[0] - s.ln()).abs() < 1e-13);
    }

    #[test]
    fn quartic_is_even() {
        let t = quartic();
        for k in 0..t.k_max {
            assert!(t.a[k].abs() < 1e-10);
        }
    }

    #[test]
    fn monic_small_cases() {
        let t = hermite(1, 10);
        let z = Complex64::new(0.7, -1.3);
        let (v, d) = eval_monic(&t, 0, z).unwrap();
        assert_eq!(v.to_complex(), Complex64::new(1.0, 0.0));
        assert!(d.is_zero());
        let (v, d) = eval_monic(&t, 1, z).unwrap();
        assert!((v.to_complex() - (z - t.a[0])).norm() < 1e-14);
        assert!((d.to_complex() - 1.0).norm() < 1e-14);
        let (v, _) = eval_monic(&t, 3, Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.to_complex() - Complex64::new(-2.0, 0.0)).norm() < 1e-10);
        assert!(matches!(
            eval_monic(&t, 10, z),
            Err(Error::IndexOutOfTable { .. })
        ));
    }

    #[test]
    fn gamma_examples() {
        let t = hermite(1, 4);
        let g = gamma_const(&t, 0).unwrap().to_complex();
        assert!((g - Complex64::new(0.0, -(2.0 * PI).sqrt())).norm() < 1e-12);
        for k in 0..4 {
            let g = gamma_const(&t, k).unwrap();
            assert_eq!(g.phase, Complex64::new(0.0, -1.0));
            assert!((g.log_mag + t.log_c2[k] - (2.0 * PI).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn orthogonality_residual() {
        let t = quartic();
        let tol = 1e-10;
        // independent fine quadrature on [-4, 4]
        let (xs, ws) = composite(&uniform_breaks(-4.0, 4.0, 400));
        let km = t.k_max - 1;
        let mut gram = vec![vec![0.0; km + 1]; km + 1];
        for (x, w) in xs.iter().zip(&ws) {
            let q = t.orthonormal_real(km, *x);
            let lw = t.cfg.log_weight(*x);
            let vals: Vec<f64> = q.iter().map(|(l, s)| s * (l + 0.5 * lw).exp()).collect();
            for j in 0..=km {
                for k in 0..=km {
                    gram[j][k] += w * vals[j] * vals[k];
                }
            }
        }
        for j in 0..=km {
            for k in 0..=km {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((gram[j][k] - want).abs() < tol, "({j},{k}) {}", gram[j][k]);
            }
        }
    }

    #[test]
    fn norm_consistency() {
        let t = quartic();
        for k in 1..t.k_max {
            let r = (t.log_c2[k] - t.log_c2[k - 1]).exp();
            assert!((r - t.b[k]).abs() <= 1e-10 * t.b[k]);
        }
    }

    #[test]
    fn monicity_at_large_imaginary_z() {
        let t = quartic();
        let z = Complex64::new(0.0, 1e3);
        for k in 1..t.k_max {
            let (v, _) = eval_monic(t, k, z).unwrap();
            let r = (v / ScaledComplex::from(z).powi(k as i32)).to_complex();
            assert!((r - 1.0).norm() < 1e-2 * k as f64);
        }
    }

    #[test]
    fn large_n_values_stay_finite() {
        let t = hermite(160, 170);
        let (v, d) = eval_monic(&t, 165, Complex64::new(0.1, 0.01)).unwrap();
        assert!(v.is_finite() && d.is_finite());
        // in the bulk |π_k| is comparable to c_k
        assert!((v.log_mag - t.log_c(165)).abs() < 10.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn derivative_matches_finite_difference(re in -1.5f64..1.5, im in -1.0f64..1.0, k in 1usize..29) {
            let t = quartic();
            let z = Complex64::new(re, im);
            let h = 1e-5;
            let (_, d) = eval_monic(t, k, z).unwrap();
            let (p, _) = eval_monic(t, k, z + h).unwrap();
            let (m, _) = eval_monic(t, k, z - h).unwrap();
            let fd = p.sub(&m).scale_by_log(-(2.0 * h).ln());
            prop_assert!(fd.rel_diff(&d) < 1e-5, "k={} fd={:?} d={:?}", k, fd, d);
        }
    }
}
