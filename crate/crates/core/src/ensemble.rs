//! Polynomial potentials, the weight `exp(-N V)` and quadrature settings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V(x) = sum_{j=1}^d c_j x^j` with even `d` and `c_d > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    /// `coeffs[j-1]` multiplies `x^j`. Trailing zeros are dropped before the
    /// admissibility check.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let d = coeffs.len();
        if d < 2 {
            return Err(Error::InvalidPotential("degree must be at least 2".into()));
        }
        if !d.is_multiple_of(2) {
            return Err(Error::InvalidPotential(format!("degree {d} is odd")));
        }
        if coeffs[d - 1] <= 0.0 {
            return Err(Error::InvalidPotential(
                "leading coefficient must be positive".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// `V(x) = x^2 / 2`.
    pub fn gaussian() -> Self {
        Self::new(vec![0.0, 0.5]).unwrap()
    }

    /// `V(x) = c x^{2m}`.
    pub fn monomial(m: usize, c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPotential("m must be positive".into()));
        }
        let mut v = vec![0.0; 2 * m];
        v[2 * m - 1] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `(V(x), V'(x))` by Horner.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &c in self.coeffs.iter().rev() {
            dv = dv * x + v;
            v = v * x + c;
        }
        // the loop built sum c_j x^{j-1}; multiply through by x
        (v * x, dv * x + v)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// True when all odd-power coefficients vanish.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0.0)
    }

    /// `Some((m, c))` when `V = c x^{2m}`.
    pub fn as_monomial(&self) -> Option<(usize, f64)> {
        let d = self.degree();
        if self.coeffs[..d - 1].iter().all(|&c| c == 0.0) {
            Some((d / 2, self.coeffs[d - 1]))
        } else {
            None
        }
    }
}

impl FromStr for Potential {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub potential: Potential,
    pub n: usize,
}

impl EnsembleConfig {
    pub fn new(potential: Potential, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        Ok(Self { potential, n })
    }

    /// `-N V(x)`.
    pub fn log_weight(&self, x: f64) -> f64 {
        -(self.n as f64) * self.potential.value(x)
    }
}

pub fn potential_eval(v: &Potential, x: f64) -> (f64, f64) {
    v.eval(x)
}

pub fn log_weight(cfg: &EnsembleConfig, x: f64) -> f64 {
    cfg.log_weight(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Relative tolerance in (0, 1).
    pub tol: f64,
    /// Extra log-scale margin below `log(tol)` used when truncating the weight.
    pub log_threshold: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            log_threshold: -700.0,
            max_panels: 4096,
        }
    }
}

impl QuadratureSpec {
    pub fn new(tol: f64, log_threshold: f64, max_panels: usize) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidConfig(format!("tolerance {tol} not in (0,1)")));
        }
        if max_panels == 0 {
            return Err(Error::InvalidConfig("max_panels must be positive".into()));
        }
        Ok(Self {
            tol,
            log_threshold,
            max_panels,
        })
    }

    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, -700.0, 4096)
    }
}

/// Smallest `T` (to within 1%) with `-N V(±T) + 2 k_max log T < log(tol) + log_threshold`
/// and the same holding for every larger `|x|`.
pub fn truncation_point(cfg: &EnsembleConfig, k_max: usize, q: &QuadratureSpec) -> f64 {
    let target = q.tol.ln() + q.log_threshold;
    let f = |t: f64| -> f64 {
        let lw = cfg.log_weight(t).max(cfg.log_weight(-t));
        lw + 2.0 * k_max as f64 * t.max(1.0).ln()
    };
    // walk outward until the bound holds and stays decreasing
    let mut hi = 1.0;
    while !(f(hi) < target && f(2.0 * hi) < f(hi)) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target && f(mid * 1.01) <= f(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-3 * hi {
            break;
        }
    }
    hi
}
