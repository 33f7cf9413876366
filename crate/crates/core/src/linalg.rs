//! Small dense complex determinants in scaled form, Vandermonde products and
//! permutation enumeration.

use itertools::Itertools;
use num_complex::Complex64;

use crate::scaled::ScaledComplex;

/// Largest matrix handled by [`det_scaled`].
pub const MAX_DET_SIZE: usize = 16;

/// Determinant of a square matrix of scaled entries.
///
/// Row maxima and then column maxima of the log-magnitudes are factored out so
/// that the remaining mantissas are at most one in modulus; the reduced matrix
/// is factored by LU with partial pivoting.
pub fn det_scaled(m: &[Vec<ScaledComplex>]) -> ScaledComplex {
    let n = m.len();
    if n == 0 {
        return ScaledComplex::ONE;
    }
    assert!(m.iter().all(|r| r.len() == n), "det_scaled: matrix not square");
    assert!(n <= MAX_DET_SIZE, "det_scaled: matrix too large");

    let mut log_scale = 0.0;
    let row_max: Vec<f64> = m
        .iter()
        .map(|r| r.iter().map(|e| e.log_mag).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if row_max.contains(&f64::NEG_INFINITY) {
        return ScaledComplex::ZERO;
    }
    let mut col_max = vec![f64::NEG_INFINITY; n];
    for (i, r) in m.iter().enumerate() {
        for (j, e) in r.iter().enumerate() {
            col_max[j] = col_max[j].max(e.log_mag - row_max[i]);
        }
    }
    if col_max.contains(&f64::NEG_INFINITY) {
        return ScaledComplex::ZERO;
    }
    log_scale += row_max.iter().sum::<f64>() + col_max.iter().sum::<f64>();

    let mut a: Vec<Vec<Complex64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, e)| e.to_complex_scaled(row_max[i] + col_max[j]))
                .collect()
        })
        .collect();

    let d = lu_det(&mut a);
    ScaledComplex::from_scaled(d, log_scale)
}

/// Determinant of a plain complex matrix by in-place LU with partial pivoting.
pub fn lu_det(a: &mut [Vec<Complex64>]) -> Complex64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap();
        if a[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let pivot = a[k][k];
        det *= pivot;
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    det
}

/// Plain complex determinant (convenience wrapper over [`det_scaled`]).
pub fn det_complex(m: &[Vec<Complex64>]) -> Complex64 {
    let s: Vec<Vec<ScaledComplex>> = m
        .iter()
        .map(|r| r.iter().map(|&z| ScaledComplex::from(z)).collect())
        .collect();
    det_scaled(&s).to_complex()
}

/// `prod_{i<j} (x_j - x_i)`.
pub fn vandermonde(x: &[Complex64]) -> ScaledComplex {
    let mut acc = ScaledComplex::ONE;
    for j in 0..x.len() {
        for i in 0..j {
            acc = acc * ScaledComplex::from(x[j] - x[i]);
        }
    }
    acc
}

/// Sign of a permutation given as an image vector.
pub fn perm_sign(p: &[usize]) -> i32 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// All permutations of `0..n` in lexicographic order, paired with their sign.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    (0..n)
        .permutations(n)
        .map(|p| {
            let s = perm_sign(&p);
            (p, s)
        })
        .collect()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Groups values that coincide within `tol * (1 + |x|)`, preserving the order
/// of first appearance. Returns `(representative, multiplicity)` pairs and,
/// for each input position, the index of its group.
pub fn group_coincident(x: &[Complex64], tol: f64) -> (Vec<(Complex64, usize)>, Vec<usize>) {
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    let mut which = Vec::with_capacity(x.len());
    for &z in x {
        match groups
            .iter()
            .position(|(g, _)| (z - g).norm() <= tol * (1.0 + g.norm()))
        {
            Some(k) => {
                groups[k].1 += 1;
                which.push(k);
            }
            None => {
                which.push(groups.len());
                groups.push((z, 1));
            }
        }
    }
    (groups, which)
}

/// Confluent Vandermonde `prod_{g<g'} (y_g' - y_g)^{m_g m_g'}`, the limit of
/// `Δ(x) / prod_g Δ(within-group offsets)` when the points of each group merge.
pub fn vandermonde_grouped(groups: &[(Complex64, usize)]) -> ScaledComplex {
    let mut acc = ScaledComplex::ONE;
    for j in 0..groups.len() {
        for i in 0..j {
            let d = ScaledComplex::from(groups[j].0 - groups[i].0);
            acc = acc * d.powi((groups[i].1 * groups[j].1) as i32);
        }
    }
    acc
}
