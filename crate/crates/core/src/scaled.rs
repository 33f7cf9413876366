//! Complex numbers stored as `exp(log_mag) * phase`.
//!
//! Monic polynomials, Cauchy transforms and the `exp(±N V)` prefactors at
//! `N ~ 100` routinely leave the range of `f64`. Every quantity that can do so
//! travels through the library as a [`ScaledComplex`].

use std::fmt;
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    /// Natural log of the magnitude; `-inf` encodes an exact zero.
    pub log_mag: f64,
    /// Unit-modulus phase (set to `1` for zero).
    pub phase: Complex64,
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exp({:.12}) * ({:.12}{:+.12}i)",
            self.log_mag, self.phase.re, self.phase.im
        )
    }
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        log_mag: f64::NEG_INFINITY,
        phase: Complex64 { re: 1.0, im: 0.0 },
    };

    pub const ONE: ScaledComplex = ScaledComplex {
        log_mag: 0.0,
        phase: Complex64 { re: 1.0, im: 0.0 },
    };

    /// Builds from a log-magnitude and an arbitrary non-zero complex factor
    /// (only its direction is kept).
    pub fn from_parts(log_mag: f64, direction: Complex64) -> Self {
        let r = direction.norm();
        if r == 0.0 || log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            log_mag,
            phase: direction / r,
        }
    }

    /// `exp(log_scale) * value` without forming the product.
    pub fn from_scaled(value: Complex64, log_scale: f64) -> Self {
        let r = value.norm();
        if r == 0.0 {
            return Self::ZERO;
        }
        Self {
            log_mag: r.ln() + log_scale,
            phase: value / r,
        }
    }

    pub fn from_complex(value: Complex64) -> Self {
        Self::from_scaled(value, 0.0)
    }

    pub fn from_real(value: f64) -> Self {
        Self::from_complex(Complex64::new(value, 0.0))
    }

    /// `exp(w)` for complex `w`.
    pub fn exp(w: Complex64) -> Self {
        Self {
            log_mag: w.re,
            phase: Complex64::from_polar(1.0, w.im),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn is_finite(&self) -> bool {
        !self.log_mag.is_nan()
            && self.log_mag != f64::INFINITY
            && self.phase.re.is_finite()
            && self.phase.im.is_finite()
    }

    /// The plain complex value; overflows to `inf` / underflows to `0` when the
    /// magnitude is not representable.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.phase * self.log_mag.exp()
    }

    /// Value times `exp(-log_scale)`, which keeps mantissas near unity when the
    /// caller factors out a common scale.
    pub fn to_complex_scaled(&self, log_scale: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.phase * (self.log_mag - log_scale).exp()
    }

    pub fn abs(&self) -> f64 {
        self.log_mag.exp()
    }

    pub fn conj(&self) -> Self {
        Self {
            log_mag: self.log_mag,
            phase: self.phase.conj(),
        }
    }

    pub fn recip(&self) -> Self {
        Self {
            log_mag: -self.log_mag,
            phase: self.phase.conj(),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        if self.is_zero() {
            return if n == 0 { Self::ONE } else { Self::ZERO };
        }
        Self {
            log_mag: self.log_mag * n as f64,
            phase: self.phase.powi(n),
        }
    }

    pub fn scale_by_log(&self, log_factor: f64) -> Self {
        Self {
            log_mag: self.log_mag + log_factor,
            phase: self.phase,
        }
    }

    pub fn mul_complex(&self, z: Complex64) -> Self {
        *self * Self::from_complex(z)
    }

    /// Sum of two scaled numbers, computed relative to the larger magnitude.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let m = self.log_mag.max(other.log_mag);
        let s = self.to_complex_scaled(m) + other.to_complex_scaled(m);
        Self::from_scaled(s, m)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&(-*other))
    }

    /// Sum of many terms with one common rescaling.
    pub fn sum<'a, I: IntoIterator<Item = &'a ScaledComplex>>(terms: I) -> Self {
        let terms: Vec<&ScaledComplex> = terms.into_iter().collect();
        let m = terms
            .iter()
            .map(|t| t.log_mag)
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let s: Complex64 = terms.iter().map(|t| t.to_complex_scaled(m)).sum();
        Self::from_scaled(s, m)
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let m = self.log_mag.max(other.log_mag);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.to_complex_scaled(m) - other.to_complex_scaled(m)).norm()
    }
}

impl Mul for ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        let p = self.phase * rhs.phase;
        // renormalise to keep |phase| = 1 against drift
        ScaledComplex {
            log_mag: self.log_mag + rhs.log_mag,
            phase: p / p.norm(),
        }
    }
}

impl Div for ScaledComplex {
    type Output = ScaledComplex;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for ScaledComplex {
    type Output = ScaledComplex;
    fn neg(self) -> Self {
        ScaledComplex {
            log_mag: self.log_mag,
            phase: -self.phase,
        }
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_one() {
        assert!(ScaledComplex::ZERO.is_zero());
        assert_eq!(ScaledComplex::ONE.to_complex(), Complex64::new(1.0, 0.0));
        assert_eq!(ScaledComplex::from_real(0.0), ScaledComplex::ZERO);
        assert!((ScaledComplex::ZERO * ScaledComplex::ONE).is_zero());
    }

    #[test]
    fn survives_overflow() {
        let big = ScaledComplex::from_parts(2000.0, Complex64::new(0.0, 1.0));
        let prod = big * big.recip();
        assert!((prod.to_complex() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let sum = big.add(&big);
        assert!((sum.log_mag - (2000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn sum_cancels_to_zero() {
        let a = ScaledComplex::from_parts(500.0, Complex64::new(1.0, 1.0));
        assert!(a.sub(&a).is_zero());
    }

    proptest! {
        #[test]
        fn round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = Complex64::new(re, im);
            let s = ScaledComplex::from_complex(z);
            prop_assert!((s.to_complex() - z).norm() <= 1e-14 * z.norm().max(1e-300));
            if !s.is_zero() {
                prop_assert!((s.phase.norm() - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn mul_matches_complex(a in -50f64..50.0, b in -50f64..50.0, c in -50f64..50.0, d in -50f64..50.0) {
            let x = Complex64::new(a, b);
            let y = Complex64::new(c, d);
            let p = (ScaledComplex::from(x) * ScaledComplex::from(y)).to_complex();
            prop_assert!((p - x * y).norm() <= 1e-12 * (x * y).norm().max(1e-300));
        }
    }
}
