//! Eigenvalue samplers for the density `exp(-N sum V(x_i)) Δ²(x)` and Monte-Carlo
//! estimates of characteristic-polynomial averages.
//!
//! The Gaussian sampler uses the tridiagonal β = 2 model: diagonal `N(0, 1)`,
//! off-diagonal `χ_{2k} / √2`, rescaled by `1 / √(2Nc)` for `V = c x²`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{finite_density, CorrelatorSpec};
use crate::ensemble::{EnsembleConfig, QuadratureSpec};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::orthopoly::build_recurrence;

/// Independent chains per run; fixed so results do not depend on thread count.
pub const CHAINS: usize = 8;
/// Batches used for the batch-means standard error.
pub const BATCHES: usize = 40;
/// Denominator guard `|Im ε| >= GUARD / (N ρ(Re ε))`.
pub const GUARD: f64 = 0.05;
const TARGET_ACCEPTANCE: f64 = 0.4;
const MIN_GAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    GaussianDirect,
    MetropolisLoggas,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub method: SamplerMethod,
    /// Burn-in sweeps (Metropolis only).
    pub burn_in: usize,
    /// Sweeps between recorded samples (Metropolis only).
    pub thinning: usize,
    /// Initial proposal width; tuned during burn-in.
    pub step: f64,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn direct(seed: u64) -> Self {
        Self {
            method: SamplerMethod::GaussianDirect,
            burn_in: 0,
            thinning: 1,
            step: 0.1,
            seed,
        }
    }

    pub fn metropolis(seed: u64) -> Self {
        Self {
            method: SamplerMethod::MetropolisLoggas,
            burn_in: 500,
            thinning: 2,
            step: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step {} must be positive", self.step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Mean Metropolis acceptance after tuning; `1` for the direct sampler.
    pub acceptance_rate: f64,
}

/// Single-chain sampler. Yields one eigenvalue vector per `next`.
pub struct Sampler {
    cfg: EnsembleConfig,
    spec: SamplerSpec,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    c: f64,
    accepted: u64,
    proposed: u64,
}

impl Sampler {
    /// Chain `chain` of the run seeded by `spec.seed`; chains use disjoint
    /// ChaCha streams of the same key.
    pub fn new(cfg: &EnsembleConfig, spec: &SamplerSpec, chain: u64) -> Result<Self> {
        spec.validate()?;
        let c = match spec.method {
            SamplerMethod::GaussianDirect => match cfg.potential.as_monomial() {
                Some((1, c)) => c,
                _ => {
                    return Err(Error::UnsupportedPotential(format!(
                        "direct sampling needs V = c x^2, got {}",
                        cfg.potential
                    )))
                }
            },
            SamplerMethod::MetropolisLoggas => 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(chain);
        let n = cfg.n;
        let state = (0..n)
            .map(|i| if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 })
            .collect();
        let mut s = Self {
            cfg: cfg.clone(),
            spec: *spec,
            rng,
            state,
            c,
            accepted: 0,
            proposed: 0,
        };
        if spec.method == SamplerMethod::MetropolisLoggas {
            s.burn_in();
        }
        Ok(s)
    }

    /// Acceptance fraction since burn-in ended.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn step(&self) -> f64 {
        self.spec.step
    }

    fn direct(&mut self) -> Vec<f64> {
        let n = self.cfg.n;
        let mut t = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = self.rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..n.saturating_sub(1) {
            let dof = 2.0 * (n - 1 - i) as f64;
            let chi = ChiSquared::new(dof).expect("positive dof").sample(&mut self.rng).sqrt();
            let b = chi / 2f64.sqrt();
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        let scale = 1.0 / (2.0 * n as f64 * self.c).sqrt();
        let mut ev: Vec<f64> = SymmetricEigen::new(t)
            .eigenvalues
            .iter()
            .map(|x| x * scale)
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Change in log-density when site `i` moves to `y`, or `None` if `y`
    /// lands on another eigenvalue.
    fn delta(&self, i: usize, y: f64) -> Option<f64> {
        let x = self.state[i];
        let mut d = -(self.cfg.n as f64) * (self.cfg.potential.value(y) - self.cfg.potential.value(x));
        for (j, &z) in self.state.iter().enumerate() {
            if j == i {
                continue;
            }
            let gap = (y - z).abs();
            if gap < MIN_GAP {
                return None;
            }
            d += 2.0 * (gap.ln() - (x - z).abs().ln());
        }
        Some(d)
    }

    /// One sweep of `N` single-site proposals; returns the number accepted.
    fn sweep(&mut self) -> usize {
        let mut acc = 0;
        for i in 0..self.cfg.n {
            let y = self.state[i] + self.spec.step * self.rng.sample::<f64, _>(StandardNormal);
            if let Some(d) = self.delta(i, y) {
                if d >= 0.0 || self.rng.random::<f64>() < d.exp() {
                    self.state[i] = y;
                    acc += 1;
                }
            }
        }
        acc
    }

    /// Robbins-Monro adaptation of the step toward the target acceptance,
    /// frozen once burn-in ends.
    fn burn_in(&mut self) {
        let n = self.cfg.n as f64;
        let mut log_step = self.spec.step.ln();
        for k in 0..self.spec.burn_in {
            let rate = self.sweep() as f64 / n;
            log_step += (rate - TARGET_ACCEPTANCE) / (1.0 + k as f64).powf(0.6);
            self.spec.step = log_step.exp();
        }
    }

    fn metropolis(&mut self) -> Vec<f64> {
        for _ in 0..self.spec.thinning {
            self.accepted += self.sweep() as u64;
            self.proposed += self.cfg.n as u64;
        }
        let mut ev = self.state.clone();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl Iterator for Sampler {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        Some(match self.spec.method {
            SamplerMethod::GaussianDirect => self.direct(),
            SamplerMethod::MetropolisLoggas => self.metropolis(),
        })
    }
}

/// Samples per chain: `n` split over `CHAINS`, earlier chains take the remainder.
fn chain_sizes(n: usize) -> Vec<usize> {
    (0..CHAINS)
        .map(|c| n / CHAINS + usize::from(c < n % CHAINS))
        .collect()
}

/// Run all chains, mapping every sample through `f`; results are concatenated
/// in chain order. Returns the values and the mean acceptance rate.
fn run_chains<T, F>(cfg: &EnsembleConfig, spec: &SamplerSpec, n: usize, f: F) -> Result<(Vec<T>, f64)>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let per_chain: Vec<Result<(Vec<T>, f64)>> = chain_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| {
            let mut s = Sampler::new(cfg, spec, c as u64)?;
            let vals: Vec<T> = s.by_ref().take(size).map(|x| f(&x)).collect();
            Ok((vals, s.acceptance_rate()))
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut rate = 0.0;
    for r in per_chain {
        let (v, a) = r?;
        out.extend(v);
        rate += a;
    }
    Ok((out, rate / CHAINS as f64))
}

/// `n_samples` eigenvalue vectors (each sorted ascending).
pub fn sample_spectrum(cfg: &EnsembleConfig, spec: &SamplerSpec, n_samples: usize) -> Result<Vec<Vec<f64>>> {
    Ok(run_chains(cfg, spec, n_samples, |x| x.to_vec())?.0)
}

/// Density used by the variance guard at `x`.
fn guard_density(cfg: &EnsembleConfig, x: f64) -> Result<f64> {
    if let Ok(meas) = EquilibriumMeasure::from_potential(&cfg.potential) {
        return Ok(meas.psi(x));
    }
    let table = build_recurrence(cfg, cfg.n + 1, &QuadratureSpec::default())?;
    finite_density(&table, cfg, x)
}

/// Refuse denominator points closer to the real axis than `GUARD / (Nρ)`.
pub fn check_variance_guard(cfg: &EnsembleConfig, eps: &[Complex64]) -> Result<()> {
    for e in eps {
        let rho = guard_density(cfg, e.re)?;
        if rho <= 0.0 {
            if e.im == 0.0 {
                return Err(Error::VarianceGuardViolated { im: 0.0, threshold: f64::MIN_POSITIVE });
            }
            continue;
        }
        let threshold = GUARD / (cfg.n as f64 * rho);
        if e.im.abs() < threshold {
            return Err(Error::VarianceGuardViolated { im: e.im.abs(), threshold });
        }
    }
    Ok(())
}

/// `∏ Z(num) / ∏ Z(den)` for one spectrum, through a sum of logarithms.
pub fn sample_value(x: &[f64], num: &[Complex64], den: &[Complex64]) -> Complex64 {
    let mut log = Complex64::new(0.0, 0.0);
    for &xi in x {
        for &m in num {
            log += (m - xi).ln();
        }
        for &e in den {
            log -= (e - xi).ln();
        }
    }
    log.exp()
}

/// Mean and batch-means standard error (modulus of the complex deviation).
pub fn batch_means(values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<Complex64>() / n as f64;
    let b = BATCHES.min(n);
    if b < 2 {
        return (mean, 0.0);
    }
    let means: Vec<Complex64> = (0..b)
        .map(|k| {
            let chunk = &values[k * n / b..(k + 1) * n / b];
            chunk.iter().sum::<Complex64>() / chunk.len() as f64
        })
        .collect();
    let var = means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Monte-Carlo estimate of `<∏ Z(numerator) / ∏ Z(denominator)>`.
pub fn estimate_correlator(
    cfg: &EnsembleConfig,
    spec: &SamplerSpec,
    corr: &CorrelatorSpec,
    n_samples: usize,
) -> Result<MCEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let num = corr.numerator();
    let den = corr.denominator();
    check_variance_guard(cfg, &den)?;
    let (values, rate) = run_chains(cfg, spec, n_samples, |x| sample_value(x, &num, &den))?;
    let (mean, stderr) = batch_means(&values);
    Ok(MCEstimate {
        mean,
        stderr,
        n_samples,
        seed: spec.seed,
        acceptance_rate: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Potential;

    fn cfg(n: usize) -> EnsembleConfig {
        EnsembleConfig::new(Potential::gaussian(), n).unwrap()
    }

    #[test]
    fn second_moment_of_semicircle() {
        // E[tr H²]/N = 1/(2c) exactly for V = c x²
        for (coeffs, exact) in [("0,0.5", 1.0), ("0,1", 0.5)] {
            let c = EnsembleConfig::new(coeffs.parse().unwrap(), 20).unwrap();
            let samples = sample_spectrum(&c, &SamplerSpec::direct(3), 4000).unwrap();
            let vals: Vec<Complex64> = samples
                .iter()
                .map(|x| Complex64::from(x.iter().map(|v| v * v).sum::<f64>() / 20.0))
                .collect();
            let (m, se) = batch_means(&vals);
            assert!((m.re - exact).abs() < 3.0 * se, "{coeffs}: {m} ± {se}");
        }
    }

    #[test]
    fn histogram_is_symmetric() {
        let c = cfg(10);
        for spec in [SamplerSpec::direct(5), SamplerSpec::metropolis(5)] {
            let s = sample_spectrum(&c, &spec, 2000).unwrap();
            let all: Vec<f64> = s.into_iter().flatten().collect();
            let pos = all.iter().filter(|x| **x > 0.0).count() as f64;
            let n = all.len() as f64;
            // generous: correlated samples inflate the binomial spread
            assert!((pos / n - 0.5).abs() < 6.0 * (0.25 / n).sqrt() * 3.0);
        }
    }

    #[test]
    fn samplers_agree_in_distribution() {
        let c = cfg(8);
        let a: Vec<f64> = sample_spectrum(&c, &SamplerSpec::direct(11), 10_000)
            .unwrap()
            .into_iter()
            .map(|x| x[0])
            .collect();
        let mut spec = SamplerSpec::metropolis(12);
        spec.thinning = 10;
        let b: Vec<f64> = sample_spectrum(&c, &spec, 10_000)
            .unwrap()
            .into_iter()
            .map(|x| x[0])
            .collect();
        // chi-square two-sample test on 20 equiprobable bins of the smallest eigenvalue
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        let edges: Vec<f64> = (1..20).map(|k| sorted[k * sorted.len() / 20]).collect();
        let bin = |v: f64| edges.partition_point(|e| *e < v);
        let (mut ca, mut cb) = ([0f64; 20], [0f64; 20]);
        a.iter().for_each(|v| ca[bin(*v)] += 1.0);
        b.iter().for_each(|v| cb[bin(*v)] += 1.0);
        let chi2: f64 = (0..20)
            .map(|k| (ca[k] - cb[k]).powi(2) / (ca[k] + cb[k]))
            .sum();
        // 99th percentile of chi-square with 19 dof
        assert!(chi2 < 36.19, "chi2 = {chi2}");
    }

    #[test]
    fn tuned_acceptance_in_range() {
        let c = cfg(12);
        let est = estimate_correlator(
            &c,
            &SamplerSpec::metropolis(1),
            &CorrelatorSpec::products(vec![], vec![Complex64::new(0.1, 0.0)]),
            800,
        )
        .unwrap();
        assert!((0.2..=0.6).contains(&est.acceptance_rate), "{}", est.acceptance_rate);
    }

    #[test]
    fn deterministic_and_symmetric() {
        let c = cfg(6);
        let z = |a: f64, b: f64| Complex64::new(a, b);
        let s1 = CorrelatorSpec::ratios(vec![z(0.1, 0.4), z(-0.3, -0.5)], vec![z(0.2, 0.0), z(0.5, 0.1)]);
        let s2 = CorrelatorSpec::ratios(vec![z(-0.3, -0.5), z(0.1, 0.4)], vec![z(0.5, 0.1), z(0.2, 0.0)]);
        for spec in [SamplerSpec::direct(9), SamplerSpec::metropolis(9)] {
            let a = estimate_correlator(&c, &spec, &s1, 3000).unwrap();
            let b = estimate_correlator(&c, &spec, &s1, 3000).unwrap();
            assert_eq!(a, b);
            let p = estimate_correlator(&c, &spec, &s2, 3000).unwrap();
            assert!((p.mean - a.mean).norm() < 1e-12 * a.mean.norm());
        }
        let e = estimate_correlator(&c, &SamplerSpec::direct(1), &CorrelatorSpec::ratios(vec![], vec![]), 10).unwrap();
        assert_eq!(e.mean, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn guard_and_unsupported() {
        let c = cfg(6);
        let near = CorrelatorSpec::ratios(vec![Complex64::new(0.0, 1e-3)], vec![Complex64::new(0.0, 0.0)]);
        assert!(matches!(
            estimate_correlator(&c, &SamplerSpec::direct(1), &near, 10),
            Err(Error::VarianceGuardViolated { .. })
        ));
        let quartic = EnsembleConfig::new(Potential::monomial(2, 1.0).unwrap(), 4).unwrap();
        assert!(matches!(
            Sampler::new(&quartic, &SamplerSpec::direct(1), 0),
            Err(Error::UnsupportedPotential(_))
        ));
        assert!(Sampler::new(&quartic, &SamplerSpec::metropolis(1), 0).is_ok());
    }
}
