//! Brute-force checks of the algebraic identities behind the determinant
//! formulas: Lagrange interpolation sums, the coset expansion of products of
//! inverse characteristic polynomials, the Cauchy-Littlewood expansion in
//! Schur polynomials, and the Cauchy-Binet reduction of double permutation sums.

use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det_complex, factorial, permutations};

/// Separation below which roots count as coincident.
pub const ROOT_SEPARATION: f64 = 1e-10;
/// Relative tolerance per term used to judge residuals.
pub const TERM_TOL: f64 = 1e-10;
/// Largest `N` for the coset expansion.
pub const PARTITION_CAP: usize = 8;
/// Largest `n + m` for the double permutation sum.
pub const APPENDIX_CAP: usize = 6;

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub residual: f64,
    pub n_terms: usize,
    pub max_term: f64,
    /// Truncation allowance (Schur sums only).
    pub tail_bound: f64,
}

impl IdentityReport {
    /// `TERM_TOL * n_terms * max_term + tail_bound`.
    pub fn tolerance(&self) -> f64 {
        TERM_TOL * self.n_terms as f64 * self.max_term.max(f64::MIN_POSITIVE) + self.tail_bound
    }

    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance()
    }
}

/// Candidate eigenvalues and probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub x: Vec<Complex64>,
    pub eps: Vec<Complex64>,
}

impl RootSet {
    pub fn new(x: Vec<Complex64>, eps: Vec<Complex64>) -> Result<Self> {
        for (i, a) in x.iter().enumerate() {
            for b in &x[i + 1..] {
                if (a - b).norm() < ROOT_SEPARATION {
                    return Err(Error::CoincidentRoots(format!("{a} and {b}")));
                }
            }
        }
        for e in &eps {
            if x.iter().any(|r| (r - e).norm() < ROOT_SEPARATION) {
                return Err(Error::CoincidentRoots(format!("probe {e} sits on a root")));
            }
        }
        Ok(Self { x, eps })
    }

    /// `Z(ε) = prod (ε - x_ν)`.
    pub fn z(&self, e: Complex64) -> Complex64 {
        self.x.iter().map(|r| e - r).product()
    }

    /// `Z'(x_ν) = prod_{j ≠ ν} (x_ν - x_j)`.
    pub fn z_prime(&self, nu: usize) -> Complex64 {
        self.x
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != nu)
            .map(|(_, r)| self.x[nu] - r)
            .product()
    }
}

fn pow(z: Complex64, k: usize) -> Complex64 {
    z.powu(k as u32)
}

/// Both Lagrange identities for every `K` in `k_range`:
/// `sum_ν x_ν^K / Z'(x_ν) = 0` for `K <= N - 2`, and
/// `ε^K / Z(ε) = sum_ν x_ν^K / ((ε - x_ν) Z'(x_ν))` for `K <= N - 1`.
pub fn lagrange_checks(roots: &RootSet, k_range: std::ops::RangeInclusive<usize>) -> IdentityReport {
    let n = roots.x.len();
    let zp: Vec<Complex64> = (0..n).map(|nu| roots.z_prime(nu)).collect();
    let mut residual: f64 = 0.0;
    let mut max_term: f64 = 0.0;
    let mut n_terms = 0;
    for k in k_range {
        if n >= 2 && k + 2 <= n {
            let terms: Vec<Complex64> = (0..n).map(|nu| pow(roots.x[nu], k) / zp[nu]).collect();
            n_terms += terms.len();
            max_term = terms.iter().fold(max_term, |m, t| m.max(t.norm()));
            residual = residual.max(terms.iter().sum::<Complex64>().norm());
        }
        if k < n {
            for &e in &roots.eps {
                let lhs = pow(e, k) / roots.z(e);
                let terms: Vec<Complex64> = (0..n)
                    .map(|nu| pow(roots.x[nu], k) / ((e - roots.x[nu]) * zp[nu]))
                    .collect();
                n_terms += terms.len() + 1;
                max_term = terms.iter().fold(max_term.max(lhs.norm()), |m, t| m.max(t.norm()));
                residual = residual.max((lhs - terms.iter().sum::<Complex64>()).norm());
            }
        }
    }
    IdentityReport {
        name: "lagrange".into(),
        residual,
        n_terms,
        max_term,
        tail_bound: 0.0,
    }
}

/// Coset expansion of `prod_{l<M} ε_l^{N-M} / Z(ε_l)`: a sum over ascending
/// `M`-subsets `S` (with ascending complement `S^c`) of
/// `prod_{i∈S} x_i^{N-M} prod_{i∈S, j<M} (ε_j - x_i)^{-1}
/// · Δ(x_S) Δ(x_{S^c}) / Δ(x_S, x_{S^c})`.
/// With `Δ(x) = prod_{i<j} (x_j - x_i)` the ratio equals
/// `(-1)^{M(N-M)} prod_{i∈S, j∉S} (x_i - x_j)^{-1}`.
pub fn partition_identity_check(m: usize, roots: &RootSet) -> Result<IdentityReport> {
    let n = roots.x.len();
    if n > PARTITION_CAP {
        return Err(Error::SizeBudgetExceeded(format!(
            "coset expansion limited to N <= {PARTITION_CAP}, got {n}"
        )));
    }
    if roots.eps.len() != m || m > n || m == 0 {
        return Err(Error::DimensionMismatch(format!(
            "need 1 <= M = |ε| <= N (M = {m}, |ε| = {}, N = {n})",
            roots.eps.len()
        )));
    }
    let x = &roots.x;
    let lhs: Complex64 = roots.eps.iter().map(|&e| pow(e, n - m) / roots.z(e)).product();
    let conv = if m * (n - m) % 2 == 1 { -1.0 } else { 1.0 };
    let terms: Vec<Complex64> = (0..n)
        .combinations(m)
        .map(|s| {
            let rest: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
            let joined: Vec<Complex64> = s.iter().chain(&rest).map(|&i| x[i]).collect();
            let sub: Vec<Complex64> = s.iter().map(|&i| x[i]).collect();
            let comp: Vec<Complex64> = rest.iter().map(|&i| x[i]).collect();
            let mut t = Complex64::new(conv, 0.0);
            for &i in &s {
                t *= pow(x[i], n - m);
                for &e in &roots.eps {
                    t /= e - x[i];
                }
            }
            t * vand_plain(&sub) * vand_plain(&comp) / vand_plain(&joined)
        })
        .collect();
    let rhs: Complex64 = terms.iter().sum();
    let max_term = terms.iter().fold(lhs.norm(), |a, t| a.max(t.norm()));
    Ok(IdentityReport {
        name: format!("partition N={n} M={m}"),
        residual: (lhs - rhs).norm(),
        n_terms: terms.len() + 1,
        max_term,
        tail_bound: 0.0,
    })
}

/// `prod_{i<j} (x_j - x_i)`.
fn vand_plain(x: &[Complex64]) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    for j in 0..x.len() {
        for i in 0..j {
            p *= x[j] - x[i];
        }
    }
    p
}

/// Partitions of every size up to `cap` with at most `parts` parts, each
/// listed in non-increasing order.
pub fn partitions(cap: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if parts == 0 {
            return;
        }
        for p in (1..=max.min(rest)).rev() {
            cur.push(p);
            rec(rest - p, p, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(cap, cap, parts, &mut Vec::new(), &mut out);
    out
}

/// Schur polynomial as the bialternant `det(x_i^{λ_j + N - j}) / det(x_i^{N - j})`.
pub fn schur(lambda: &[usize], x: &[Complex64]) -> Result<Complex64> {
    let n = x.len();
    if lambda.iter().filter(|&&p| p > 0).count() > n {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let exps = |l: &dyn Fn(usize) -> usize| -> Vec<Vec<Complex64>> {
        (0..n).map(|i| (0..n).map(|j| pow(x[i], l(j) + n - 1 - j)).collect()).collect()
    };
    let num = det_complex(&exps(&|j| lambda.get(j).copied().unwrap_or(0)));
    let den = det_complex(&exps(&|_| 0));
    if den.norm() == 0.0 {
        return Err(Error::CoincidentRoots("bialternant needs distinct variables".into()));
    }
    Ok(num / den)
}

/// Truncated Cauchy-Littlewood sum against `prod (1 - x_i y_j)^{-1}`.
///
/// The neglected terms are bounded by the tail of
/// `sum_d C(d + NM - 1, NM - 1) r^d` with `r = max |x_i y_j|`, and also by the
/// tail of the same expansion at `|x|`, `|y|` (Schur polynomials have
/// non-negative coefficients); the smaller bound is reported.
pub fn schur_expansion_check(x: &[Complex64], y: &[Complex64], degree_cap: usize) -> Result<IdentityReport> {
    let r = x
        .iter()
        .flat_map(|a| y.iter().map(move |b| (a * b).norm()))
        .fold(0.0, f64::max);
    if r > 0.5 {
        return Err(Error::ConvergenceDomainViolated(format!(
            "max |x_i y_j| = {r} exceeds 0.5"
        )));
    }
    let parts = x.len().min(y.len());
    let lams = partitions(degree_cap, parts);
    let product: Complex64 = x
        .iter()
        .flat_map(|a| y.iter().map(move |b| 1.0 / (1.0 - a * b)))
        .product();
    let terms: Vec<Complex64> = lams
        .iter()
        .map(|l| Ok(schur(l, x)? * schur(l, y)?))
        .collect::<Result<_>>()?;
    let partial: Complex64 = terms.iter().sum();

    let nm = (x.len() * y.len()) as f64;
    let mut geometric = 0.0;
    let mut coef = 1.0; // C(d + NM - 1, NM - 1) built incrementally
    for d in 1..10_000usize {
        coef *= (d as f64 + nm - 1.0) / d as f64;
        if d > degree_cap {
            let t = coef * r.powi(d as i32);
            geometric += t;
            if t < 1e-18 * geometric {
                break;
            }
        }
    }
    let ax: Vec<Complex64> = x.iter().map(|z| Complex64::from(z.norm())).collect();
    let ay: Vec<Complex64> = y.iter().map(|z| Complex64::from(z.norm())).collect();
    let abs_product: f64 = ax
        .iter()
        .flat_map(|a| ay.iter().map(move |b| 1.0 / (1.0 - a.re * b.re)))
        .product();
    let abs_partial: f64 = lams
        .iter()
        .map(|l| Ok((schur(l, &ax)? * schur(l, &ay)?).re))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let abs_tail = (abs_product - abs_partial).max(0.0);
    let max_term = terms.iter().fold(product.norm(), |a, t| a.max(t.norm()));
    Ok(IdentityReport {
        name: format!("schur N={} M={} cap={degree_cap}", x.len(), y.len()),
        residual: (product - partial).norm(),
        n_terms: terms.len() + 1,
        max_term,
        tail_bound: geometric.min(abs_tail * (1.0 + 1e-12)),
    })
}

/// Values of the three routes of the double permutation sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixRoutes {
    pub raw: f64,
    pub detdet: f64,
    pub determinant: f64,
}

/// The double sum over `σ, π ∈ S_{n+m}` computed three ways. `f[k][j]` is
/// `f_k(φ_j)` and `g[k][j]` is `g_k(ψ_j)` for `k < n + m`, `j < m`.
pub fn appendix_routes(n: usize, m: usize, f: &[Vec<f64>], g: &[Vec<f64>]) -> Result<AppendixRoutes> {
    let size = n + m;
    if size > APPENDIX_CAP {
        return Err(Error::SizeBudgetExceeded(format!(
            "double permutation sum limited to n + m <= {APPENDIX_CAP}, got {size}"
        )));
    }
    if f.len() != size || g.len() != size || f.iter().chain(g).any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "f and g need {size} rows of {m} values"
        )));
    }
    let perms = permutations(size);
    let raw: f64 = perms
        .par_iter()
        .map(|(s, ss)| {
            let mut acc = 0.0;
            let fs: f64 = (0..m).map(|i| f[s[i]][i]).product();
            for (p, sp) in &perms {
                if (m..size).any(|i| s[i] != p[i]) {
                    continue;
                }
                let gp: f64 = (0..m).map(|i| g[p[i]][i]).product();
                acc += (ss * sp) as f64 * fs * gp;
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let real_det = |rows: &[usize], t: &[Vec<f64>]| -> f64 {
        let mat: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|&k| (0..m).map(|j| Complex64::from(t[k][j])).collect())
            .collect();
        det_complex(&mat).re
    };
    let detdet = factorial(n)
        * (0..size)
            .combinations(m)
            .map(|ks| real_det(&ks, f) * real_det(&ks, g))
            .sum::<f64>();
    let summed: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Complex64::from((0..size).map(|l| f[l][i] * g[l][j]).sum::<f64>()))
                .collect()
        })
        .collect();
    let determinant = factorial(n) * if m == 0 { 1.0 } else { det_complex(&summed).re };
    Ok(AppendixRoutes { raw, detdet, determinant })
}

/// Largest pairwise discrepancy among the three routes.
pub fn appendix_sum_check(n: usize, m: usize, f: &[Vec<f64>], g: &[Vec<f64>]) -> Result<IdentityReport> {
    let r = appendix_routes(n, m, f, g)?;
    let vals = [r.raw, r.detdet, r.determinant];
    let residual = (0..3)
        .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
        .map(|(i, j)| (vals[i] - vals[j]).abs())
        .fold(0.0, f64::max);
    let fmax = f.iter().chain(g).flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let size = n + m;
    let n_terms = (factorial(size) * factorial(n)) as usize;
    Ok(IdentityReport {
        name: format!("appendix n={n} m={m}"),
        residual,
        n_terms,
        max_term: fmax.powi(2 * m as i32),
        tail_bound: 0.0,
    })
}

/// Which checks [`run_suite`] performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lagrange,
    Partition,
    Schur,
    Appendix,
    All,
}

fn random_roots(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    loop {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from(rng.random_range(-2.0..2.0)))
            .collect();
        let ok = (0..n).all(|i| (i + 1..n).all(|j| (x[i] - x[j]).norm() > 0.05));
        if ok {
            return x;
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::new(rng.random_range(-radius..radius), rng.random_range(-radius..radius))
}

/// Randomised instances of the selected identities.
///
/// Lagrange: six roots, `ε = 1 + i` and random probes, `K = 0..5`. Partition:
/// every `N <= 8` with `M <= 3`. Schur: `N, M <= 3` with `|x_i y_j| <= 0.5`
/// and degree cap 12. Appendix: every `n + m <= 5` with `m >= 1`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<IdentityReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let want = |s: Suite| suite == s || suite == Suite::All;
    let mut out = Vec::new();
    if want(Suite::Lagrange) {
        for n in [1usize, 3, 6] {
            let x = random_roots(&mut rng, n);
            let eps = vec![Complex64::new(1.0, 1.0), random_point(&mut rng, 2.0) + Complex64::new(0.0, 0.3)];
            out.push(lagrange_checks(&RootSet::new(x, eps)?, 0..=n.saturating_sub(1).max(5)));
        }
    }
    if want(Suite::Partition) {
        for n in 1..=PARTITION_CAP {
            for m in 1..=n.min(3) {
                let x = random_roots(&mut rng, n);
                let eps: Vec<Complex64> = (0..m)
                    .map(|_| random_point(&mut rng, 2.0) + Complex64::new(0.0, 0.5))
                    .collect();
                out.push(partition_identity_check(m, &RootSet::new(x, eps)?)?);
            }
        }
    }
    if want(Suite::Schur) {
        for (n, m) in [(1usize, 1usize), (2, 2), (3, 2), (2, 3), (3, 3)] {
            let x: Vec<Complex64> = (0..n).map(|_| random_point(&mut rng, 0.45)).collect();
            let y: Vec<Complex64> = (0..m).map(|_| random_point(&mut rng, 0.45)).collect();
            out.push(schur_expansion_check(&x, &y, 12)?);
        }
    }
    if want(Suite::Appendix) {
        for size in 1..=5usize {
            for m in 1..=size {
                let n = size - m;
                let mut table = || -> Vec<Vec<f64>> {
                    (0..size)
                        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect()
                };
                let f = table();
                let g = table();
                out.push(appendix_sum_check(n, m, &f, &g)?);
            }
        }
    }
    Ok(out)
}
