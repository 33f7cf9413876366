//! Equilibrium measures of `V(x) = c x^{2m}`, the density of states, the tilt
//! `α(x) = V'(x) / (2ρ(x))` and the large-N resolvent.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlators::finite_density;
use crate::ensemble::{EnsembleConfig, Potential};
use crate::error::{Error, Result};
use crate::orthopoly::RecurrenceTable;
use crate::quadrature::{composite, refine_near, uniform_breaks};

/// Equilibrium measure `ψ(x) dx` on `[-a, a]` of `V(x) = c x^{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    pub m: usize,
    pub c: f64,
    pub a: f64,
}

/// `prod_{l=1}^{j} (2l - 1) / (2l)`.
fn half_odd_ratio(j: usize) -> f64 {
    (1..=j).map(|l| (2 * l - 1) as f64 / (2 * l) as f64).product()
}

/// Equilibrium measure of `V(x) = x^{2m}`.
pub fn equilibrium_monomial(m: usize) -> Result<EquilibriumMeasure> {
    EquilibriumMeasure::new(m, 1.0)
}

impl EquilibriumMeasure {
    /// `V(x) = c x^{2m}`; the support and density follow from the `c = 1`
    /// case by the substitution `x -> c^{1/(2m)} x`.
    pub fn new(m: usize, c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPotential("m must be positive".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidPotential(format!("coefficient {c} must be positive")));
        }
        let a1 = (m as f64 * half_odd_ratio(m)).powf(-1.0 / (2 * m) as f64);
        Ok(Self {
            m,
            c,
            a: a1 * c.powf(-1.0 / (2 * m) as f64),
        })
    }

    pub fn from_potential(v: &Potential) -> Result<Self> {
        let (m, c) = v.as_monomial().ok_or_else(|| {
            Error::UnsupportedPotential(format!(
                "closed-form equilibrium needs V = c x^(2m), got {v}"
            ))
        })?;
        Self::new(m, c)
    }

    fn scale(&self) -> f64 {
        self.c.powf(1.0 / (2 * self.m) as f64)
    }

    /// The polynomial factor `h_1` for `c = 1`, at the rescaled point.
    fn h1_unit(&self, y: f64) -> f64 {
        let m = self.m;
        let a = self.a * self.scale();
        (0..m)
            .map(|j| y.powi((2 * m - 2 - 2 * j) as i32) * a.powi((2 * j) as i32) * half_odd_ratio(j))
            .sum()
    }

    /// Density `ψ(x)`, zero outside `(-a, a)`.
    pub fn psi(&self, x: f64) -> f64 {
        if x.abs() >= self.a {
            return 0.0;
        }
        let s = self.scale();
        let y = s * x;
        let a = self.a * s;
        s * self.m as f64 / PI * (a * a - y * y).sqrt() * self.h1_unit(y)
    }

    /// `V(x)` and `V'(x)`.
    pub fn potential(&self, x: f64) -> (f64, f64) {
        let n = (2 * self.m) as i32;
        (self.c * x.powi(n), self.c * n as f64 * x.powi(n - 1))
    }

    /// `∫ f(s) ψ(s) ds` through `s = a sin θ` on `panels` uniform panels.
    fn integrate<F: Fn(f64) -> f64>(&self, panels: usize, f: F) -> f64 {
        let (ts, ws) = composite(&uniform_breaks(-PI / 2.0, PI / 2.0, panels));
        ts.iter()
            .zip(&ws)
            .map(|(t, w)| {
                let s = self.a * t.sin();
                w * f(s) * self.psi(s) * self.a * t.cos()
            })
            .sum()
    }

    /// `∫ ψ`.
    pub fn total_mass(&self) -> f64 {
        self.integrate(16, |_| 1.0)
    }

    /// `(1/π) PV ∫ ψ(s) / (x - s) ds` by singularity subtraction.
    pub fn hilbert(&self, x: f64) -> Result<f64> {
        if x.abs() >= self.a {
            return Err(Error::OutsideSupport { x, a: self.a });
        }
        let px = self.psi(x);
        let eval = |panels: usize| -> f64 {
            let (ts, ws) = composite(&uniform_breaks(-PI / 2.0, PI / 2.0, panels));
            let body: f64 = ts
                .iter()
                .zip(&ws)
                .map(|(t, w)| {
                    let s = self.a * t.sin();
                    let d = x - s;
                    if d.abs() < 1e-12 {
                        return 0.0;
                    }
                    w * (self.psi(s) - px) / d * self.a * t.cos()
                })
                .sum();
            (body + px * ((x + self.a) / (self.a - x)).ln()) / PI
        };
        let mut panels = 8;
        let mut prev = eval(panels);
        loop {
            panels *= 2;
            let cur = eval(panels);
            if (cur - prev).abs() <= 1e-13 * (1.0 + cur.abs()) {
                return Ok(cur);
            }
            if panels >= 4096 {
                return Err(Error::NonConvergedQuadrature {
                    tol: 1e-13,
                    panels,
                    context: format!("Hilbert transform at {x}"),
                });
            }
            prev = cur;
        }
    }

    /// `V(x) - 2 ∫ log|x - s| ψ(s) ds`; equal to the Lagrange constant on the
    /// support and at least that value outside it.
    pub fn effective_potential(&self, x: f64) -> f64 {
        let theta0 = if x.abs() < self.a {
            Some((x / self.a).asin())
        } else {
            None
        };
        let mut breaks = uniform_breaks(-PI / 2.0, PI / 2.0, 32);
        if let Some(t0) = theta0 {
            breaks = refine_near(&breaks, t0, 1e-9, 4096);
        }
        let (ts, ws) = composite(&breaks);
        let log_part: f64 = ts
            .iter()
            .zip(&ws)
            .map(|(t, w)| {
                let s = self.a * t.sin();
                w * (x - s).abs().ln() * self.psi(s) * self.a * t.cos()
            })
            .sum();
        self.potential(x).0 - 2.0 * log_part
    }
}

/// Which density feeds `ρ` and `α`.
#[derive(Debug, Clone, Copy)]
pub enum DensityMode<'a> {
    /// `K_N(x, x) / N` from a recurrence table.
    FiniteN(&'a RecurrenceTable),
    /// The equilibrium density (monomial potentials only).
    Limit,
}

/// `(ρ(x), α(x))` with `α = V'(x) / (2ρ(x))`.
pub fn density_and_alpha(cfg: &EnsembleConfig, x: f64, mode: DensityMode<'_>) -> Result<(f64, f64)> {
    let rho = match mode {
        DensityMode::FiniteN(table) => finite_density(table, cfg, x)?,
        DensityMode::Limit => {
            let meas = EquilibriumMeasure::from_potential(&cfg.potential)?;
            if x.abs() >= meas.a {
                return Err(Error::OutsideSupport { x, a: meas.a });
            }
            meas.psi(x)
        }
    };
    let dv = cfg.potential.eval(x).1;
    Ok((rho, dv / (2.0 * rho)))
}

/// `R(x) = iπNψ(x) - N V'(x) / 2`.
pub fn resolvent_limit(cfg: &EnsembleConfig, x: f64) -> Result<Complex64> {
    let (rho, _) = density_and_alpha(cfg, x, DensityMode::Limit)?;
    let n = cfg.n as f64;
    Ok(Complex64::new(-n * cfg.potential.eval(x).1 / 2.0, PI * n * rho))
}

/// `Nρ = Im R / π`.
pub fn n_rho_from_resolvent(r: Complex64) -> f64 {
    r.im / PI
}

/// `α = -π Re R / Im R`.
pub fn alpha_from_resolvent(r: Complex64) -> f64 {
    -PI * r.re / r.im
}

/// Largest `|Hψ(x) - V'(x) / (2π)|` over the grid.
pub fn euler_lagrange_residual(meas: &EquilibriumMeasure, v: &Potential, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in grid {
        let h = meas.hilbert(x)?;
        worst = worst.max((h - v.eval(x).1 / (2.0 * PI)).abs());
    }
    Ok(worst)
}

/// Effective potential at `x` minus its value at the centre; non-negative
/// (up to quadrature error) when the variational inequality holds.
pub fn inequality_margin(meas: &EquilibriumMeasure, x: f64) -> f64 {
    meas.effective_potential(x) - meas.effective_potential(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::QuadratureSpec;
    use crate::orthopoly::build_recurrence;

    fn grid(a: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -0.8 * a + 1.6 * a * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn closed_forms() {
        let e = equilibrium_monomial(1).unwrap();
        assert!((e.a - 2f64.sqrt()).abs() < 1e-15);
        assert!((e.psi(0.0) - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((e.psi(1.0) - 1.0 / PI).abs() < 1e-15);
        let e2 = equilibrium_monomial(2).unwrap();
        assert!((e2.a - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-14);
        let g = EquilibriumMeasure::from_potential(&Potential::gaussian()).unwrap();
        assert!((g.a - 2.0).abs() < 1e-14 && (g.psi(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(e.psi(1.5), 0.0);
        assert!(EquilibriumMeasure::from_potential(&"0,1,0,1".parse().unwrap()).is_err());
    }

    #[test]
    fn normalised_and_positive() {
        for m in 1..=4 {
            for c in [1.0, 0.5, 3.0] {
                let e = EquilibriumMeasure::new(m, c).unwrap();
                assert!((e.total_mass() - 1.0).abs() < 1e-10, "m={m} c={c}");
                for x in grid(e.a / 0.8 * 0.999, 50) {
                    assert!(e.psi(x) > 0.0);
                }
            }
        }
    }

    #[test]
    fn hilbert_residual_small() {
        for m in 1..=3 {
            let e = equilibrium_monomial(m).unwrap();
            let v = Potential::monomial(m, 1.0).unwrap();
            let g = grid(e.a, 41);
            let r = euler_lagrange_residual(&e, &v, &g).unwrap();
            assert!(r < 1e-6, "m={m}: {r}");
        }
        let e = equilibrium_monomial(2).unwrap();
        let a = e.hilbert(0.37).unwrap();
        let b = e.hilbert(-0.37).unwrap();
        assert!((a + b).abs() < 1e-13);
        assert!(e.hilbert(2.0).is_err());
    }

    #[test]
    fn variational_inequality_outside() {
        for m in 1..=3 {
            let e = equilibrium_monomial(m).unwrap();
            assert!(inequality_margin(&e, 1.5 * e.a) >= -1e-6);
            assert!(inequality_margin(&e, -1.5 * e.a) >= -1e-6);
            // constant on the support
            assert!(inequality_margin(&e, 0.5 * e.a).abs() < 1e-6);
        }
    }

    #[test]
    fn resolvent_and_inversions() {
        let cfg = EnsembleConfig::new(Potential::monomial(1, 1.0).unwrap(), 50).unwrap();
        let r = resolvent_limit(&cfg, 0.0).unwrap();
        assert!(r.re.abs() < 1e-15);
        assert!((r.im - 50.0 * 2f64.sqrt()).abs() < 1e-12);
        let r = resolvent_limit(&cfg, 0.6).unwrap();
        let (rho, alpha) = density_and_alpha(&cfg, 0.6, DensityMode::Limit).unwrap();
        assert!((alpha_from_resolvent(r) - alpha).abs() < 1e-12);
        assert!((n_rho_from_resolvent(r) - 50.0 * rho).abs() < 1e-12);
        assert!(matches!(
            density_and_alpha(&cfg, 2.0, DensityMode::Limit),
            Err(Error::OutsideSupport { .. })
        ));
        let odd = EnsembleConfig::new("0.1,1".parse().unwrap(), 5).unwrap();
        assert!(matches!(
            density_and_alpha(&odd, 0.0, DensityMode::Limit),
            Err(Error::UnsupportedPotential(_))
        ));
    }

    #[test]
    fn finite_density_near_limit() {
        let cfg = EnsembleConfig::new(Potential::gaussian(), 80).unwrap();
        let t = build_recurrence(&cfg, 82, &QuadratureSpec::default()).unwrap();
        let (rho, alpha) = density_and_alpha(&cfg, 0.0, DensityMode::FiniteN(&t)).unwrap();
        assert_eq!(alpha, 0.0);
        assert!((rho - 1.0 / PI).abs() < 5.0 / 80.0);
        let e = EquilibriumMeasure::from_potential(&cfg.potential).unwrap();
        for x in grid(e.a, 9) {
            let (r, _) = density_and_alpha(&cfg, x, DensityMode::FiniteN(&t)).unwrap();
            assert!((r - e.psi(x)).abs() < 5.0 / 80.0, "x={x}");
        }
    }
}
