use super::CMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Largest singular value, by power iteration on `M* M` until the Rayleigh
/// quotient changes by less than `1e-12` (relative).
pub fn operator_norm(m: &CMatrix) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    // fixed, irrational-looking start vector so that it is not orthogonal to
    // the top eigenspace of structured inputs
    let mut v = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + (i as f64 * 0.754_877_666).fract(), 0.5 * (i as f64 * 0.569_840_29).fract())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = &gram * &v;
        let next = v.dotc(&w).re;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(norm, 0.0);
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1e-300) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// `(|| sum A_i B_i ||, || sum A_i A_i* ||^(1/2) || sum B_i* B_i ||^(1/2))`
/// in operator norm; the first never exceeds the second.
pub fn operator_cs_check(a: &[CMatrix], b: &[CMatrix]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} left and {} right operators", a.len(), b.len())));
    }
    let d = a[0].nrows();
    if a.iter().chain(b).any(|x| x.nrows() != d || x.ncols() != d) {
        return Err(Error::DimensionMismatch(format!("all operators must be {d}x{d}")));
    }
    let mut prod = CMatrix::zeros(d, d);
    let mut aa = CMatrix::zeros(d, d);
    let mut bb = CMatrix::zeros(d, d);
    for (x, y) in a.iter().zip(b) {
        prod += x * y;
        aa += x * x.adjoint();
        bb += y.adjoint() * y;
    }
    let lhs = operator_norm(&prod);
    let rhs = operator_norm(&aa).sqrt() * operator_norm(&bb).sqrt();
    Ok((lhs, rhs))
}
