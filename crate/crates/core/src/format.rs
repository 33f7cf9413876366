//! Text formats shared by the CLI and the Python bindings.
//!
//! Complex literals: `a+bi`, `a-bi`, `a`, `bi`, `i`, `-i`, with optional
//! exponents (`1e-3+2.5E2i`). Lists are comma-separated. CSV floats carry 17
//! significant digits so that every value round-trips exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scaled::ScaledComplex;

fn bad(s: &str, why: &str) -> Error {
    Error::Parse(format!("{why}: {s:?}"))
}

fn real(s: &str, whole: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(whole, "not a number"))?;
    if !v.is_finite() {
        return Err(bad(whole, "non-finite value"));
    }
    Ok(v)
}

/// Parses one complex literal.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad(s, "empty complex literal"));
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(real(&t, s)?, 0.0));
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (real(&body[..k], s)?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => real(x, s)?,
    };
    Ok(Complex64::new(re, im))
}

/// Parses a comma-separated list of complex literals; the empty string is the
/// empty list.
pub fn parse_complex_list(s: &str) -> Result<Vec<Complex64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_complex).collect()
}

/// Parses `re,im`.
pub fn parse_pair(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(bad(s, "expected re,im"));
    }
    Ok(Complex64::new(real(parts[0], s)?, real(parts[1], s)?))
}

/// Parses a comma-separated list of reals.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| real(p, s)).collect()
}

/// Parses a comma-separated list of non-negative integers.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad(s, "not a non-negative integer")))
        .collect()
}

/// A float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `a+bi` at full precision; inverse of [`parse_complex`].
pub fn fmt_complex(z: Complex64) -> String {
    let im = fmt_f64(z.im);
    let sign = if im.starts_with('-') { "" } else { "+" };
    format!("{}{sign}{im}i", fmt_f64(z.re))
}

pub fn fmt_complex_list(zs: &[Complex64]) -> String {
    zs.iter().map(|&z| fmt_complex(z)).collect::<Vec<_>>().join(",")
}

/// `log_mag,phase_re,phase_im` for a scaled value.
pub fn fmt_scaled(v: &ScaledComplex) -> String {
    format!("{},{},{}", fmt_f64(v.log_mag), fmt_f64(v.phase.re), fmt_f64(v.phase.im))
}

/// One CSV row of full-precision floats.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn literals() {
        let cases = [
            ("0.3+0.5i", c(0.3, 0.5)),
            ("-0.2+0i", c(-0.2, 0.0)),
            ("1-2i", c(1.0, -2.0)),
            ("2.5", c(2.5, 0.0)),
            ("-3i", c(0.0, -3.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("1+i", c(1.0, 1.0)),
            ("1e-3+2.5E2i", c(1e-3, 250.0)),
            ("-1e+2-1e-2i", c(-100.0, -0.01)),
            (" 0.1 + 0.5i ", c(0.1, 0.5)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for s in ["", "abc", "1+2", "1+2ii", "nan", "1++2i"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
        assert_eq!(parse_complex_list("0.1+0.5i,-1-i").unwrap(), vec![c(0.1, 0.5), c(-1.0, -1.0)]);
        assert!(parse_complex_list("").unwrap().is_empty());
        assert_eq!(parse_pair("0.5,-1").unwrap(), c(0.5, -1.0));
        assert!(parse_pair("0.5").is_err());
        assert_eq!(parse_usize_list("20,40").unwrap(), vec![20, 40]);
    }

    #[test]
    fn full_precision() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_complex(c(1.0, -0.5)), "1.0000000000000000e0-5.0000000000000000e-1i");
    }

    proptest! {
        #[test]
        fn complex_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = c(re, im);
            prop_assert_eq!(parse_complex(&fmt_complex(z)).unwrap(), z);
        }

        #[test]
        fn float_round_trip(x in proptest::num::f64::NORMAL) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
