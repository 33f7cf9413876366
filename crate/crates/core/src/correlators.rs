//! Exact finite-N averages of products and ratios of characteristic
//! polynomials `Z_N[z] = det(z - H)`.
//!
//! Every value is available two ways: from the general `(K + M)`-square
//! determinant of Cauchy transforms and polynomials, and from the kernel
//! representations built on `W_I`, `W_II`, `W_III`. Coincident arguments
//! inside one vector are handled by replacing repeated rows with Taylor
//! coefficients and the Vandermonde with its confluent limit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::cauchy_taylor;
use crate::ensemble::{EnsembleConfig, QuadratureSpec};
use crate::error::{Error, Result};
use crate::kernels::{coincident, kernel_kn, COINCIDENCE};
use crate::linalg::{
    det_scaled, factorial, group_coincident, permutations, vandermonde, vandermonde_grouped,
    MAX_DET_SIZE,
};
use crate::orthopoly::{gamma_const, RecurrenceTable};
use crate::scaled::ScaledComplex;

/// Largest `K` accepted by [`corr_inverse`] (`(2K)!` terms).
pub const INVERSE_CAP: usize = 4;
/// Largest `M` accepted by [`corr_mixed_more_den`] (`M!` terms).
pub const MIXED_DEN_CAP: usize = 6;
/// Largest `K` accepted by the moment routines.
pub const MOMENT_CAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelatorKind {
    F1,
    F2,
    F3,
    F4,
    F5,
    General,
}

/// A correlation function and its arguments.
///
/// * `F1`: `<prod Z[λ_j] Z[μ_j]>`, `lambda` and `mu` of equal length.
/// * `F2`: `<prod Z[μ_j] / Z[ε_j]>`, `eps` and `mu` of equal length.
/// * `F3`: `<prod 1 / (Z[ϖ_j] Z[ω_j])>`, with `ϖ` in `eps` and `ω` in `omega`.
/// * `F4`, `F5`, `General`: `<prod Z[μ_l] / prod Z[ε_j]>`; `F4` needs
///   `K > M`, `F5` needs `M > K`, both with `K + M` even.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub kind: CorrelatorKind,
    pub mu: Vec<Complex64>,
    pub eps: Vec<Complex64>,
    #[serde(default)]
    pub lambda: Vec<Complex64>,
    #[serde(default)]
    pub omega: Vec<Complex64>,
}

impl CorrelatorSpec {
    pub fn products(lambda: Vec<Complex64>, mu: Vec<Complex64>) -> Self {
        Self::make(CorrelatorKind::F1, mu, Vec::new(), lambda, Vec::new())
    }

    pub fn ratios(eps: Vec<Complex64>, mu: Vec<Complex64>) -> Self {
        Self::make(CorrelatorKind::F2, mu, eps, Vec::new(), Vec::new())
    }

    pub fn inverse(varpi: Vec<Complex64>, omega: Vec<Complex64>) -> Self {
        Self::make(CorrelatorKind::F3, Vec::new(), varpi, Vec::new(), omega)
    }

    pub fn mixed(kind: CorrelatorKind, eps: Vec<Complex64>, mu: Vec<Complex64>) -> Self {
        Self::make(kind, mu, eps, Vec::new(), Vec::new())
    }

    fn make(
        kind: CorrelatorKind,
        mu: Vec<Complex64>,
        eps: Vec<Complex64>,
        lambda: Vec<Complex64>,
        omega: Vec<Complex64>,
    ) -> Self {
        Self {
            kind,
            mu,
            eps,
            lambda,
            omega,
        }
    }

    /// Arguments appearing in the numerator.
    pub fn numerator(&self) -> Vec<Complex64> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }

    /// Arguments appearing in the denominator.
    pub fn denominator(&self) -> Vec<Complex64> {
        self.eps.iter().chain(&self.omega).copied().collect()
    }

    /// Checks the shape constraints of the kind.
    pub fn validate(&self) -> Result<()> {
        let k = self.mu.len();
        let m = self.eps.len();
        let bad = |msg: String| Err(Error::DimensionMismatch(msg));
        match self.kind {
            CorrelatorKind::F1 => {
                if self.lambda.len() != k || !self.eps.is_empty() || !self.omega.is_empty() {
                    return bad(format!(
                        "F1 needs |λ| = |μ| and no denominators (got {}, {k})",
                        self.lambda.len()
                    ));
                }
            }
            CorrelatorKind::F2 => {
                if m != k || !self.lambda.is_empty() || !self.omega.is_empty() {
                    return bad(format!("F2 needs |ε| = |μ| (got {m}, {k})"));
                }
            }
            CorrelatorKind::F3 => {
                if self.omega.len() != m || k != 0 || !self.lambda.is_empty() {
                    return bad(format!(
                        "F3 needs |ϖ| = |ω| and no numerators (got {m}, {})",
                        self.omega.len()
                    ));
                }
            }
            CorrelatorKind::F4 | CorrelatorKind::F5 => {
                if !self.lambda.is_empty() || !self.omega.is_empty() {
                    return bad("F4/F5 take only ε and μ".into());
                }
                let ok = if self.kind == CorrelatorKind::F4 {
                    k > m && m >= 1
                } else {
                    m > k && k >= 1
                };
                if !ok || !(k + m).is_multiple_of(2) {
                    return bad(format!(
                        "{:?} needs K {} M, the smaller at least 1, K + M even (got K = {k}, M = {m})",
                        self.kind,
                        if self.kind == CorrelatorKind::F4 { ">" } else { "<" }
                    ));
                }
            }
            CorrelatorKind::General => {
                if !self.lambda.is_empty() || !self.omega.is_empty() {
                    return bad("general form takes only ε and μ".into());
                }
            }
        }
        Ok(())
    }

    /// Evaluates through the kernel representation of the kind.
    pub fn evaluate(
        &self,
        table: &RecurrenceTable,
        cfg: &EnsembleConfig,
        q: &QuadratureSpec,
    ) -> Result<ScaledComplex> {
        self.validate()?;
        match self.kind {
            CorrelatorKind::F1 => corr_products(table, cfg, &self.lambda, &self.mu),
            CorrelatorKind::F2 => corr_ratios(table, cfg, &self.eps, &self.mu, q),
            CorrelatorKind::F3 => corr_inverse(table, cfg, &self.eps, &self.omega, q),
            CorrelatorKind::F4 => corr_mixed_more_num(table, cfg, &self.eps, &self.mu, q),
            CorrelatorKind::F5 => corr_mixed_more_den(table, cfg, &self.eps, &self.mu, q),
            CorrelatorKind::General => {
                corr_general(table, cfg, self.mu.len(), self.eps.len(), &self.eps, &self.mu, q)
            }
        }
    }

    /// Evaluates through the general determinant formula.
    pub fn evaluate_general(
        &self,
        table: &RecurrenceTable,
        cfg: &EnsembleConfig,
        q: &QuadratureSpec,
    ) -> Result<ScaledComplex> {
        self.validate()?;
        let den = self.denominator();
        let num = self.numerator();
        corr_general(table, cfg, num.len(), den.len(), &den, &num, q)
    }
}

fn check_cfg(table: &RecurrenceTable, cfg: &EnsembleConfig) -> Result<()> {
    if &table.cfg != cfg {
        return Err(Error::InvalidConfig(
            "recurrence table was built for a different ensemble".into(),
        ));
    }
    Ok(())
}

fn need_index(table: &RecurrenceTable, k: usize) -> Result<()> {
    if k >= table.k_max {
        return Err(Error::IndexOutOfTable {
            index: k,
            depth: table.k_max,
        });
    }
    Ok(())
}

fn prod_gamma(table: &RecurrenceTable, range: std::ops::Range<usize>) -> Result<ScaledComplex> {
    let mut acc = ScaledComplex::ONE;
    for l in range {
        acc = acc * gamma_const(table, l)?;
    }
    Ok(acc)
}

fn sign(odd: bool) -> ScaledComplex {
    if odd {
        -ScaledComplex::ONE
    } else {
        ScaledComplex::ONE
    }
}

fn has_coincidence(x: &[Complex64]) -> bool {
    group_coincident(x, COINCIDENCE).0.len() < x.len()
}

/// `<prod_{j<K} Z[μ_j] / prod_{j<M} Z[ε_j]>` from the `(M + K)`-square
/// determinant whose first `M` rows are `h_k(ε_i)` and last `K` rows are
/// `π_k(μ_j)`, `k = N - M .. N + K - 1`, times
/// `(-1)^{M(M-1)/2} prod_{j=N-M}^{N-1} γ_j` and divided by `Δ(μ) Δ(ε)`.
///
/// Repeated arguments within `ε` or within `μ` are allowed at any
/// multiplicity the determinant size permits.
pub fn corr_general(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    k: usize,
    m: usize,
    eps: &[Complex64],
    mu: &[Complex64],
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    if eps.len() != m || mu.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {m} denominator and {k} numerator arguments, got {} and {}",
            eps.len(),
            mu.len()
        )));
    }
    let n = cfg.n;
    if m > n {
        return Err(Error::DimensionMismatch(format!(
            "M = {m} denominators exceed N = {n}"
        )));
    }
    if k + m == 0 {
        return Ok(ScaledComplex::ONE);
    }
    if k + m > MAX_DET_SIZE {
        return Err(Error::SizeBudgetExceeded(format!(
            "determinant of size {} exceeds {MAX_DET_SIZE}",
            k + m
        )));
    }
    let lo = n - m;
    let hi = n + k - 1;
    need_index(table, hi)?;
    let ks: Vec<usize> = (lo..=hi).collect();

    let (eg, _) = group_coincident(eps, COINCIDENCE);
    let (mg, _) = group_coincident(mu, COINCIDENCE);
    let mut rows: Vec<Vec<ScaledComplex>> = Vec::with_capacity(k + m);
    for &(y, mult) in &eg {
        let t = cauchy_taylor(table, &ks, y, mult - 1, q)?;
        for j in 0..mult {
            rows.push(t.iter().map(|ti| ti[j]).collect());
        }
    }
    for &(y, mult) in &mg {
        let t = table.taylor_all(hi, y, mult - 1)?;
        for j in 0..mult {
            rows.push(ks.iter().map(|&kk| t[kk][j]).collect());
        }
    }
    let det = det_scaled(&rows);
    // the denominator block carries (-1)^{M(M-1)/2} relative to Δ(ε) under
    // the library orientation (checked against direct N-fold quadrature)
    let pref = sign(m * m.saturating_sub(1) / 2 % 2 == 1) * prod_gamma(table, lo..n)?;
    Ok(pref * det / (vandermonde_grouped(&eg) * vandermonde_grouped(&mg)))
}

/// `π_{n-1}, π_n` and their first derivatives at `z`.
fn pi_pair(table: &RecurrenceTable, n: usize, z: Complex64) -> Result<[[ScaledComplex; 2]; 2]> {
    let t = table.taylor_all(n, z, 1)?;
    Ok([[t[n - 1][0], t[n - 1][1]], [t[n][0], t[n][1]]])
}

/// `h_{n-1}, h_n` at each point.
fn h_pairs(
    table: &RecurrenceTable,
    n: usize,
    pts: &[Complex64],
    q: &QuadratureSpec,
) -> Result<Vec<[ScaledComplex; 2]>> {
    pts.par_iter()
        .map(|&z| {
            let t = cauchy_taylor(table, &[n - 1, n], z, 0, q)?;
            Ok([t[0][0], t[1][0]])
        })
        .collect()
}

fn w1_from(
    a: &[[ScaledComplex; 2]; 2],
    b: &[[ScaledComplex; 2]; 2],
    za: Complex64,
    zb: Complex64,
) -> ScaledComplex {
    if coincident(za, zb) {
        return (a[1][1] * a[0][0]).sub(&(a[1][0] * a[0][1]));
    }
    let num = (a[1][0] * b[0][0]).sub(&(b[1][0] * a[0][0]));
    num / ScaledComplex::from(za - zb)
}

fn w2_num_from(h: &[ScaledComplex; 2], p: &[[ScaledComplex; 2]; 2]) -> ScaledComplex {
    (h[1] * p[0][0]).sub(&(h[0] * p[1][0]))
}

fn w3_from(ha: &[ScaledComplex; 2], hb: &[ScaledComplex; 2], za: Complex64, zb: Complex64) -> ScaledComplex {
    let num = (ha[1] * hb[0]).sub(&(ha[0] * hb[1]));
    num / ScaledComplex::from(za - zb)
}

/// `<prod_j Z[λ_j] Z[μ_j]>` from the `K`-square determinant of `W_{I,N+K}`.
///
/// Coincidences between `λ_i` and `μ_j` use the confluent kernel. A pair of
/// equal values within `λ` or within `μ` switches to the polynomial form;
/// three or more are rejected.
pub fn corr_products(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    lambda: &[Complex64],
    mu: &[Complex64],
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    let k = lambda.len();
    if mu.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "|λ| = {k} but |μ| = {}",
            mu.len()
        )));
    }
    if k == 0 {
        return Ok(ScaledComplex::ONE);
    }
    let n = cfg.n;
    let top = n + k;
    need_index(table, top)?;
    let mut paired = false;
    for v in [lambda, mu] {
        let (g, _) = group_coincident(v, COINCIDENCE);
        if let Some(&(y, mult)) = g.iter().find(|g| g.1 >= 3) {
            return Err(Error::ConfluentOrderTooHigh {
                order: mult,
                context: format!("{mult} coincident values at {y} in one argument vector"),
            });
        }
        paired |= g.len() < v.len();
    }
    if paired {
        return corr_products_polynomial(table, cfg, lambda, mu);
    }
    let pl: Vec<_> = lambda
        .iter()
        .map(|&z| pi_pair(table, top, z))
        .collect::<Result<_>>()?;
    let pm: Vec<_> = mu
        .iter()
        .map(|&z| pi_pair(table, top, z))
        .collect::<Result<_>>()?;
    let m: Vec<Vec<ScaledComplex>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| w1_from(&pl[i], &pm[j], lambda[i], mu[j]))
                .collect()
        })
        .collect();
    // C_{N,K} = prod_{l=N}^{N+K-1} c_l^2 / c_{N+K-1}^{2K}
    let log_c: f64 =
        (n..top).map(|l| table.log_c2[l]).sum::<f64>() - k as f64 * table.log_c2[top - 1];
    Ok(det_scaled(&m).scale_by_log(log_c) / (vandermonde(lambda) * vandermonde(mu)))
}

/// The `2K`-square polynomial form of [`corr_products`]:
/// `det[π_{N+j}(x_i)] / Δ(λ, μ)` over the joined vector `x = (λ, μ)`.
pub fn corr_products_polynomial(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    lambda: &[Complex64],
    mu: &[Complex64],
) -> Result<ScaledComplex> {
    let x: Vec<Complex64> = lambda.iter().chain(mu).copied().collect();
    corr_general(table, cfg, x.len(), 0, &[], &x, &QuadratureSpec::default())
}

/// `<prod_j Z[μ_j] / Z[ε_j]>` from the `K`-square determinant of `W_{II,N}`,
/// `(-)^{K(K-1)/2} γ_{N-1}^K Δ(ε, μ) / (Δ(ε)^2 Δ(μ)^2) det[W_{II,N}(ε_i, μ_j)]`.
///
/// When some `ε_i` equals some `μ_j` the pole of `W_II` cancels against
/// `Δ(ε, μ)`; that case is evaluated from the expanded permutation sum.
/// Repeated values within `ε` or within `μ` use the general formula.
pub fn corr_ratios(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    eps: &[Complex64],
    mu: &[Complex64],
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    let k = eps.len();
    if mu.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "|ε| = {k} but |μ| = {}",
            mu.len()
        )));
    }
    if k == 0 {
        return Ok(ScaledComplex::ONE);
    }
    let n = cfg.n;
    need_index(table, n)?;
    if has_coincidence(eps) || has_coincidence(mu) {
        return corr_general(table, cfg, k, k, eps, mu, q);
    }
    let h = h_pairs(table, n, eps, q)?;
    let p: Vec<_> = mu
        .iter()
        .map(|&z| pi_pair(table, n, z))
        .collect::<Result<_>>()?;
    let num: Vec<Vec<ScaledComplex>> = (0..k)
        .map(|i| (0..k).map(|j| w2_num_from(&h[i], &p[j])).collect())
        .collect();
    let gamma = gamma_const(table, n - 1)?.powi(k as i32);
    let pref = sign(k * (k - 1) / 2 % 2 == 1) * gamma / (vandermonde(eps) * vandermonde(mu));

    let touching = eps.iter().any(|&e| mu.iter().any(|&u| coincident(e, u)));
    if !touching {
        let w: Vec<Vec<ScaledComplex>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| num[i][j] / ScaledComplex::from(eps[i] - mu[j]))
                    .collect()
            })
            .collect();
        // Δ(ε, μ) / (Δ(ε) Δ(μ)) = prod_{i,j} (μ_j - ε_i)
        let mut cross = ScaledComplex::ONE;
        for &e in eps {
            for &u in mu {
                cross = cross * ScaledComplex::from(u - e);
            }
        }
        return Ok(pref * cross * det_scaled(&w));
    }
    // prod_{i,j}(μ_j - ε_i) det[num_ij / (ε_i - μ_j)]
    //   = (-1)^K sum_σ sgn σ prod_i num_{i σ(i)} prod_{j ≠ σ(i)} (μ_j - ε_i)
    let terms: Vec<ScaledComplex> = permutations(k)
        .into_iter()
        .map(|(perm, s)| {
            let mut t = ScaledComplex::from_real(s as f64);
            for i in 0..k {
                t = t * num[i][perm[i]];
                for j in (0..k).filter(|&j| j != perm[i]) {
                    t = t * ScaledComplex::from(mu[j] - eps[i]);
                }
            }
            t
        })
        .collect();
    Ok(pref * sign(k % 2 == 1) * ScaledComplex::sum(&terms))
}

/// Sum over `S_{2K}` of `det[W(ε_π(i), ε_π(K+j))] / (Δ(first half) Δ(second half))`.
fn split_sum(
    k: usize,
    eps: &[Complex64],
    w: &[Vec<ScaledComplex>],
) -> ScaledComplex {
    let perms = permutations(2 * k);
    let terms: Vec<ScaledComplex> = perms
        .par_iter()
        .map(|(p, _)| {
            let m: Vec<Vec<ScaledComplex>> = (0..k)
                .map(|i| (0..k).map(|j| w[p[i]][p[k + j]]).collect())
                .collect();
            let a: Vec<Complex64> = p[..k].iter().map(|&i| eps[i]).collect();
            let b: Vec<Complex64> = p[k..].iter().map(|&i| eps[i]).collect();
            det_scaled(&m) / (vandermonde(&a) * vandermonde(&b))
        })
        .collect();
    ScaledComplex::sum(&terms)
}

/// `<prod_j 1 / (Z[ϖ_j] Z[ω_j])>` as a symmetrised sum over `S_{2K}` of
/// `K`-square determinants of `W_{III,N-K}`, with prefactor
/// `(-1)^K γ_{N-K-1}^K prod_{l=N-K}^{N-1} γ_l / (2K)!`.
///
/// Repeated arguments use the general formula.
pub fn corr_inverse(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    varpi: &[Complex64],
    omega: &[Complex64],
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    let k = varpi.len();
    if omega.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "|ϖ| = {k} but |ω| = {}",
            omega.len()
        )));
    }
    if k == 0 {
        return Ok(ScaledComplex::ONE);
    }
    if k > INVERSE_CAP {
        return Err(Error::PermutationBudgetExceeded {
            size: k,
            cap: INVERSE_CAP,
        });
    }
    let n = cfg.n;
    if 2 * k > n {
        return Err(Error::DimensionMismatch(format!(
            "2K = {} denominators exceed N = {n}",
            2 * k
        )));
    }
    let eps: Vec<Complex64> = varpi.iter().chain(omega).copied().collect();
    if has_coincidence(&eps) {
        return corr_general(table, cfg, 0, 2 * k, &eps, &[], q);
    }
    let idx = n - k;
    let h = h_pairs(table, idx, &eps, q)?;
    let w: Vec<Vec<ScaledComplex>> = (0..2 * k)
        .map(|a| {
            (0..2 * k)
                .map(|b| {
                    if a == b {
                        ScaledComplex::ZERO
                    } else {
                        w3_from(&h[a], &h[b], eps[a], eps[b])
                    }
                })
                .collect()
        })
        .collect();
    let pref = inverse_prefactor(table, k)?;
    Ok(pref * split_sum(k, &eps, &w))
}

fn inverse_prefactor(table: &RecurrenceTable, k: usize) -> Result<ScaledComplex> {
    let n = table.cfg.n;
    let g = gamma_const(table, n - k - 1)?.powi(k as i32) * prod_gamma(table, n - k..n)?;
    Ok(sign(k % 2 == 1) * g / ScaledComplex::from_real(factorial(2 * k)))
}

/// `<prod_{l<K} Z[μ_l] / prod_{j<M} Z[ε_j]>` for `K > M`, `K + M = 2L`, from
/// the `L`-square block determinant with `M` rows `W_{II,n}(ε_i, μ_{L-M+j})`
/// over `L - M` rows `W_{I,n}(μ_i, μ_{L-M+j})`, `n = N - M + L`, with
/// prefactor `(-1)^{M(M-1)/2} γ_{n-1}^L / prod_{l=N}^{n-1} γ_l` and the
/// Vandermonde factor `Δ(ε; μ_tail) / (Δ(ε)^2 Δ(μ_tail)^2 Δ(μ_head))`.
///
/// Repeated or touching arguments use the general formula.
pub fn corr_mixed_more_num(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    eps: &[Complex64],
    mu: &[Complex64],
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    let (k, m) = (mu.len(), eps.len());
    if !(k > m && m >= 1 && (k + m) % 2 == 0) {
        return Err(Error::DimensionMismatch(format!(
            "needs K > M >= 1 with K + M even (got K = {k}, M = {m})"
        )));
    }
    let n_size = cfg.n;
    if m > n_size {
        return Err(Error::DimensionMismatch(format!(
            "M = {m} denominators exceed N = {n_size}"
        )));
    }
    let l = (k + m) / 2;
    let idx = n_size - m + l;
    need_index(table, idx)?;
    let all: Vec<Complex64> = eps.iter().chain(mu).copied().collect();
    if has_coincidence(&all) {
        return corr_general(table, cfg, k, m, eps, mu, q);
    }
    let (head, tail) = mu.split_at(l - m);
    let h = h_pairs(table, idx, eps, q)?;
    let p_tail: Vec<_> = tail
        .iter()
        .map(|&z| pi_pair(table, idx, z))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<ScaledComplex>> = Vec::with_capacity(l);
    for i in 0..m {
        rows.push(
            (0..l)
                .map(|j| w2_num_from(&h[i], &p_tail[j]) / ScaledComplex::from(eps[i] - tail[j]))
                .collect(),
        );
    }
    for &z in head {
        let ph = pi_pair(table, idx, z)?;
        rows.push((0..l).map(|j| w1_from(&ph, &p_tail[j], z, tail[j])).collect());
    }
    let joined: Vec<Complex64> = eps.iter().chain(tail).copied().collect();
    let vand = vandermonde(&joined)
        / (vandermonde(eps).powi(2) * vandermonde(tail).powi(2) * vandermonde(head));
    let pref = sign(m * (m - 1) / 2 % 2 == 1) * gamma_const(table, idx - 1)?.powi(l as i32)
        / prod_gamma(table, n_size..idx)?;
    Ok(pref * vand * det_scaled(&rows))
}

/// `<prod_{l<K} Z[μ_l] / prod_{j<M} Z[ε_j]>` for `M > K`, `K + M = 2L`, as a
/// symmetrised sum over `S_M` of `L`-square block determinants with `K` rows
/// of `W_{II,n}` over `(M - K)/2` rows of `W_{III,n}`, `n = N - M + L`, with
/// prefactor `(-1)^{K + M(M-1)/2} γ_{n-1}^L prod_{s=n}^{N-1} γ_s / (Δ(μ)^2 M!)`.
///
/// Repeated or touching arguments use the general formula.
pub fn corr_mixed_more_den(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    eps: &[Complex64],
    mu: &[Complex64],
    q: &QuadratureSpec,
) -> Result<ScaledComplex> {
    check_cfg(table, cfg)?;
    let (k, m) = (mu.len(), eps.len());
    if !(m > k && k >= 1 && (k + m) % 2 == 0) {
        return Err(Error::DimensionMismatch(format!(
            "needs M > K >= 1 with K + M even (got K = {k}, M = {m})"
        )));
    }
    if m > MIXED_DEN_CAP {
        return Err(Error::PermutationBudgetExceeded {
            size: m,
            cap: MIXED_DEN_CAP,
        });
    }
    let n_size = cfg.n;
    if m > n_size {
        return Err(Error::DimensionMismatch(format!(
            "M = {m} denominators exceed N = {n_size}"
        )));
    }
    let l = (k + m) / 2;
    let p = (m - k) / 2;
    let idx = n_size - p;
    need_index(table, idx)?;
    let all: Vec<Complex64> = eps.iter().chain(mu).copied().collect();
    if has_coincidence(&all) {
        return corr_general(table, cfg, k, m, eps, mu, q);
    }
    let h = h_pairs(table, idx, eps, q)?;
    let pm: Vec<_> = mu
        .iter()
        .map(|&z| pi_pair(table, idx, z))
        .collect::<Result<_>>()?;
    // W_II(ε_a, μ_i) and W_III(ε_a, ε_b)
    let w2: Vec<Vec<ScaledComplex>> = (0..m)
        .map(|a| {
            (0..k)
                .map(|i| w2_num_from(&h[a], &pm[i]) / ScaledComplex::from(eps[a] - mu[i]))
                .collect()
        })
        .collect();
    let w3: Vec<Vec<ScaledComplex>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    if a == b {
                        ScaledComplex::ZERO
                    } else {
                        w3_from(&h[a], &h[b], eps[a], eps[b])
                    }
                })
                .collect()
        })
        .collect();
    let perms = permutations(m);
    let terms: Vec<ScaledComplex> = perms
        .par_iter()
        .map(|(perm, _)| {
            let (hd, tl) = perm.split_at(p);
            let mut rows: Vec<Vec<ScaledComplex>> = Vec::with_capacity(l);
            for i in 0..k {
                rows.push(tl.iter().map(|&b| w2[b][i]).collect());
            }
            for &a in hd {
                rows.push(tl.iter().map(|&b| w3[a][b]).collect());
            }
            let et: Vec<Complex64> = tl.iter().map(|&b| eps[b]).collect();
            let eh: Vec<Complex64> = hd.iter().map(|&b| eps[b]).collect();
            let joined: Vec<Complex64> = mu.iter().chain(&et).copied().collect();
            let vand = vandermonde(&joined) / (vandermonde(&et).powi(2) * vandermonde(&eh));
            vand * det_scaled(&rows)
        })
        .collect();
    let pref = sign((k + m * (m - 1) / 2) % 2 == 1)
        * gamma_const(table, idx - 1)?.powi(l as i32)
        * prod_gamma(table, idx..n_size)?
        / (vandermonde(mu).powi(2) * ScaledComplex::from_real(factorial(m)));
    Ok(pref * ScaledComplex::sum(&terms))
}

/// Result of [`moment_positive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveMoment {
    pub exact: ScaledComplex,
    pub asymptotic: ScaledComplex,
    /// `exact / (c_N^{2K} e^{KNV(x)} (Nρ)^{K^2})`, to be compared with `Υ_K^+`.
    pub universal_ratio: f64,
}

/// Result of [`moment_negative`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeMoment {
    pub exact: ScaledComplex,
    pub asymptotic: ScaledComplex,
    /// The points `x ± iδ / (2Nρ(x))`.
    pub x_plus: Complex64,
    pub x_minus: Complex64,
}

/// `Υ_K^+ = prod_{l<K} l! / (l + K)!`.
pub fn upsilon_plus(k: usize) -> f64 {
    (0..k).map(|l| factorial(l) / factorial(l + k)).product()
}

/// Estimated endpoint pair of the spectrum, `a_N ± 2 sqrt(b_N)`.
pub fn spectral_edges(table: &RecurrenceTable) -> Result<(f64, f64)> {
    let n = table.cfg.n;
    need_index(table, n)?;
    let r = 2.0 * table.b[n].sqrt();
    Ok((table.a[n] - r, table.a[n] + r))
}

fn check_bulk(table: &RecurrenceTable, x: f64) -> Result<()> {
    let (lo, hi) = spectral_edges(table)?;
    let c = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if !((x - c).abs() < 0.9 * half) {
        return Err(Error::OutsideSupport { x: x - c, a: 0.9 * half });
    }
    Ok(())
}

/// Finite-N density of states `K_N(x, x) / N`.
pub fn finite_density(table: &RecurrenceTable, cfg: &EnsembleConfig, x: f64) -> Result<f64> {
    Ok(kernel_kn(table, cfg, cfg.n, x, x)? / cfg.n as f64)
}

fn check_moment_k(k: usize) -> Result<()> {
    if k == 0 || k > MOMENT_CAP {
        return Err(Error::ConfluentOrderTooHigh {
            order: 2 * k,
            context: format!("moments need 1 <= K <= {MOMENT_CAP}"),
        });
    }
    Ok(())
}

/// `<Z_N[x]^{2K}>` exactly (fully confluent polynomial determinant) and its
/// large-N form `c_N^{2K} e^{KNV(x)} (Nρ(x))^{K^2} Υ_K^+`, with `ρ` the
/// finite-N density.
pub fn moment_positive(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    x: f64,
    k: usize,
) -> Result<PositiveMoment> {
    check_cfg(table, cfg)?;
    check_moment_k(k)?;
    check_bulk(table, x)?;
    let n = cfg.n;
    let z = Complex64::new(x, 0.0);
    let exact = corr_general(table, cfg, 2 * k, 0, &[], &vec![z; 2 * k], &QuadratureSpec::default())?;
    let n_rho = n as f64 * finite_density(table, cfg, x)?;
    let kf = k as f64;
    let log_scale = kf * table.log_c2[n] - kf * cfg.log_weight(x) + kf * kf * n_rho.ln();
    let scale = ScaledComplex::from_parts(log_scale, Complex64::new(1.0, 0.0));
    Ok(PositiveMoment {
        exact,
        asymptotic: scale.mul_complex(Complex64::new(upsilon_plus(k), 0.0)),
        universal_ratio: (exact / scale).to_complex().re,
    })
}

/// `<Z_N[x+]^{-K} Z_N[x-]^{-K}>` at `x± = x ± iδ / (2Nρ(x))`, exactly (general
/// formula with two `K`-fold confluent groups) and its large-N form
/// `(2π)^K c_N^{-2K} e^{-KNV(x)} (Nρ(x)/δ)^{K^2}`.
pub fn moment_negative(
    table: &RecurrenceTable,
    cfg: &EnsembleConfig,
    x: f64,
    delta: f64,
    k: usize,
    q: &QuadratureSpec,
) -> Result<NegativeMoment> {
    check_cfg(table, cfg)?;
    check_moment_k(k)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::DomainViolation(format!("δ = {delta} must be positive")));
    }
    check_bulk(table, x)?;
    let n = cfg.n;
    let n_rho = n as f64 * finite_density(table, cfg, x)?;
    let off = delta / (2.0 * n_rho);
    let xp = Complex64::new(x, off);
    let xm = Complex64::new(x, -off);
    let mut args = vec![xp; k];
    args.extend(std::iter::repeat_n(xm, k));
    let exact = corr_general(table, cfg, 0, 2 * k, &args, &[], q)?;
    let kf = k as f64;
    let log_asym = kf * (2.0 * std::f64::consts::PI).ln() - kf * table.log_c2[n]
        + kf * cfg.log_weight(x)
        + kf * kf * (n_rho / delta).ln();
    Ok(NegativeMoment {
        exact,
        asymptotic: ScaledComplex::from_parts(log_asym, Complex64::new(1.0, 0.0)),
        x_plus: xp,
        x_minus: xm,
    })
}
