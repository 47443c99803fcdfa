use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{is_prime, phase, GroupFunction};
use crate::error::{Error, Result};

/// Polynomial map `F_p^n -> F_p`, stored with exponents reduced below `p`
/// (as functions `x^p = x`). Only nonzero coefficients are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPolynomial {
    p: u64,
    n: usize,
    coeffs: BTreeMap<Vec<u32>, u64>,
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

impl FpPolynomial {
    pub fn new(p: u64, n: usize, terms: impl IntoIterator<Item = (Vec<u32>, i64)>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        let mut out = Self { p, n, coeffs: BTreeMap::new() };
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch(format!("monomial {e:?} has {} exponents, expected {n}", e.len())));
            }
            out.add_term(e, c.rem_euclid(p as i64) as u64);
        }
        Ok(out)
    }

    pub fn zero(p: u64, n: usize) -> Result<Self> {
        Self::new(p, n, [])
    }

    fn add_term(&mut self, mut e: Vec<u32>, c: u64) {
        let p = self.p as u32;
        for x in &mut e {
            if *x > 0 {
                *x = (*x - 1) % (p - 1) + 1;
            }
        }
        let entry = self.coeffs.entry(e.clone()).or_insert(0);
        *entry = (*entry + c) % self.p;
        if *entry == 0 {
            self.coeffs.remove(&e);
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<u32>, u64> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|e| e.iter().sum()).max()
    }

    pub fn eval(&self, x: &[u64]) -> u64 {
        self.coeffs.iter().fold(0, |acc, (e, &c)| {
            let m = e.iter().zip(x).fold(c, |m, (&k, &xi)| m * pow_mod(xi, k as u64, self.p) % self.p);
            (acc + m) % self.p
        })
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        let coeffs = self.coeffs.iter().filter(|(e, _)| e.iter().sum::<u32>() == d).map(|(e, &c)| (e.clone(), c)).collect();
        Self { p: self.p, n: self.n, coeffs }
    }

    pub fn scale(&self, c: u64) -> Self {
        let mut out = Self { p: self.p, n: self.n, coeffs: BTreeMap::new() };
        for (e, &k) in &self.coeffs {
            out.add_term(e.clone(), k * (c % self.p) % self.p);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.coeffs {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(self.p - 1)
    }
}

impl std::fmt::Display for FpPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .map(|(e, c)| {
                let vars: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{k}", i + 1) })
                    .collect();
                match (vars.is_empty(), *c) {
                    (true, c) => c.to_string(),
                    (false, 1) => vars.join("*"),
                    (false, c) => format!("{c}*{}", vars.join("*")),
                }
            })
            .collect();
        write!(f, "{} (mod {})", terms.join(" + "), self.p)
    }
}

/// Solves `sum_j alpha_j j^k = [k == i]` for `k, j < d` over `F_p`.
fn vandermonde_column(d: usize, i: usize, p: u64) -> Result<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = (0..d)
        .map(|k| {
            let mut row: Vec<u64> = (0..d).map(|j| pow_mod(j as u64, k as u64, p)).collect();
            row.push(u64::from(k == i));
            row
        })
        .collect();
    for c in 0..d {
        let piv = (c..d).find(|&r| a[r][c] != 0).ok_or_else(|| Error::Singular(format!("Vandermonde matrix mod {p}")))?;
        a.swap(c, piv);
        let inv = inv_mod(a[c][c], p);
        for k in c..=d {
            a[c][k] = a[c][k] * inv % p;
        }
        for r in 0..d {
            if r != c && a[r][c] != 0 {
                let f = a[r][c];
                for k in c..=d {
                    a[r][k] = (a[r][k] + p * p - f * a[c][k] % p) % p;
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[d]).collect())
}

/// Polynomials `Q_0, ..., Q_{d-1}` with `P(y) = sum_j Q_j(x + j y)` for all
/// `x, y`, built level by level from the homogeneous parts of `P`.
pub fn polynomial_split(poly: &FpPolynomial, d: usize) -> Result<Vec<FpPolynomial>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if (poly.p as usize) < d {
        return Err(Error::Singular(format!("p = {} < d = {d} makes the Vandermonde system singular", poly.p)));
    }
    if poly.degree().is_some_and(|deg| deg as usize >= d) {
        return Err(Error::InvalidParameter(format!("degree {} exceeds d - 1 = {}", poly.degree().unwrap(), d - 1)));
    }
    let mut qs = vec![FpPolynomial::zero(poly.p, poly.n)?; d];
    for i in 0..=poly.degree().unwrap_or(0) {
        let part = poly.homogeneous_part(i);
        if part.is_zero() {
            continue;
        }
        let alpha = vandermonde_column(d, i as usize, poly.p)?;
        for (q, a) in qs.iter_mut().zip(alpha) {
            *q = q.add(&part.scale(a));
        }
    }
    Ok(qs)
}

/// Checks `P(y) = sum_j Q_j(x + j y)` on all of `(F_p^n)^2`.
pub fn verify_split(poly: &FpPolynomial, qs: &[FpPolynomial], budget: u128) -> Result<bool> {
    let (p, n) = (poly.p, poly.n);
    let pts = (p as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
    if pts > budget {
        return Err(Error::BudgetExceeded { needed: pts, budget });
    }
    let size = p.pow(n as u32);
    let coords = |mut i: u64| -> Vec<u64> {
        let mut c = vec![0; n];
        for k in (0..n).rev() {
            c[k] = i % p;
            i /= p;
        }
        c
    };
    for xi in 0..size {
        let x = coords(xi);
        for yi in 0..size {
            let y = coords(yi);
            let rhs = qs.iter().enumerate().fold(0, |acc, (j, q)| {
                let pt: Vec<u64> = x.iter().zip(&y).map(|(a, b)| (a + j as u64 * b) % p).collect();
                (acc + q.eval(&pt)) % p
            });
            if rhs != poly.eval(&y) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSearch {
    pub poly: FpPolynomial,
    /// `|E_x f(x) e(P(x) / p)|`.
    pub correlation: f64,
    /// False when the budget cut the enumeration short.
    pub complete: bool,
}

/// Exponent vectors of total degree `<= s`, by degree, then lexicographically.
fn monomials(n: usize, s: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        if cur.iter().sum::<u32>() <= s {
            out.push(cur.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] <= s {
                break;
            }
            cur[k] = 0;
        }
    }
}

/// Best-correlating classical polynomial of degree `<= s`, exhaustively.
/// Coefficient vectors run in lexicographic order and the first maximizer
/// is kept.
pub fn witness_search(f: &GroupFunction, s: u32, budget: u128) -> Result<WitnessSearch> {
    let p = f
        .group()
        .prime_field()
        .ok_or_else(|| Error::Unsupported("witness search needs a group F_p^n".into()))?;
    if p <= s as u64 {
        return Err(Error::Characteristic { p, required: s as u64 + 1 });
    }
    let n = f.group().rank();
    let mons = monomials(n, s);
    let size = f.values().len();
    let table: Vec<Vec<u64>> = mons
        .iter()
        .map(|e| {
            (0..size)
                .map(|x| {
                    let c = f.group().coords(x);
                    e.iter().zip(&c).fold(1, |m, (&k, &xi)| m * pow_mod(xi, k as u64, p) % p)
                })
                .collect()
        })
        .collect();
    let phases: Vec<Complex64> = (0..p).map(|r| phase(r, p)).collect();
    let total = (p as u128).checked_pow(mons.len() as u32).unwrap_or(u128::MAX);
    let limit = total.min(budget);
    let per_chunk = total / p as u128;
    let m = mons.len();

    let chunk = |c0: u64| -> Option<(f64, Vec<u64>)> {
        let start = c0 as u128 * per_chunk;
        if start >= limit {
            return None;
        }
        let count = per_chunk.min(limit - start);
        let mut digits = vec![0u64; m];
        digits[0] = c0;
        let mut vals: Vec<u64> = table[0].iter().map(|&v| v * c0 % p).collect();
        let mut best: Option<(f64, Vec<u64>)> = None;
        for step in 0..count {
            let corr = (0..size).map(|x| f.values()[x] * phases[vals[x] as usize]).sum::<Complex64>().norm() / size as f64;
            if best.as_ref().is_none_or(|(b, _)| corr > b + 1e-12) {
                best = Some((corr, digits.clone()));
            }
            if step + 1 == count {
                break;
            }
            let mut k = m;
            loop {
                k -= 1;
                digits[k] = (digits[k] + 1) % p;
                for (v, &t) in vals.iter_mut().zip(&table[k]) {
                    *v = (*v + t) % p;
                }
                if digits[k] != 0 || k == 1 {
                    break;
                }
            }
        }
        best
    };
    let results: Vec<Option<(f64, Vec<u64>)>> = (0..p).into_par_iter().map(chunk).collect();
    let mut best: Option<(f64, Vec<u64>)> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| r.0 > b + 1e-12) {
            best = Some(r);
        }
    }
    let (correlation, digits) = best.expect("at least one candidate");
    let poly = FpPolynomial::new(p, n, mons.into_iter().zip(digits.into_iter().map(|c| c as i64)))?;
    Ok(WitnessSearch { poly, correlation, complete: limit == total })
}

pub fn polynomial_from_json(v: &Value) -> Result<FpPolynomial> {
    let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing integer \"p\"".into()))?;
    let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing integer \"n\"".into()))? as usize;
    let coeffs = v
        .get("coeffs")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Parse("missing \"coeffs\" object".into()))?;
    let terms = coeffs
        .iter()
        .map(|(k, c)| {
            let e = k
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent key {k:?}"))))
                .collect::<Result<Vec<u32>>>()?;
            let c = c.as_i64().ok_or_else(|| Error::Parse(format!("coefficient for {k:?} must be an integer")))?;
            Ok((e, c))
        })
        .collect::<Result<Vec<_>>>()?;
    FpPolynomial::new(p, n, terms)
}

pub fn polynomial_to_json(poly: &FpPolynomial) -> Value {
    let coeffs: Map<String, Value> = poly
        .coeffs
        .iter()
        .map(|(e, &c)| (e.iter().map(u32::to_string).collect::<Vec<_>>().join(","), json!(c)))
        .collect();
    json!({ "p": poly.p, "n": poly.n, "coeffs": coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gowers::FiniteAbelianGroup;
    use crate::rng::seeded;
    use rand::Rng;

    fn poly(p: u64, n: usize, terms: &[(&[u32], i64)]) -> FpPolynomial {
        FpPolynomial::new(p, n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn exponent_and_coefficient_reduction() {
        let q = poly(3, 1, &[(&[3], 1), (&[1], 2)]);
        assert!(q.is_zero());
        let r = poly(5, 2, &[(&[1, 1], 7), (&[0, 0], -1)]);
        assert_eq!(r.eval(&[2, 3]), (2 * 6 + 4) % 5);
        assert_eq!(r.degree(), Some(2));
        assert_eq!(r.to_string(), "4 + 2*x1*x2 (mod 5)");
    }

    #[test]
    fn split_examples() {
        let c = poly(5, 1, &[(&[0], 3)]);
        let qs = polynomial_split(&c, 3).unwrap();
        assert_eq!(qs[0], c);
        assert!(qs[1].is_zero() && qs[2].is_zero());

        let y = poly(3, 1, &[(&[1], 1)]);
        let qs = polynomial_split(&y, 2).unwrap();
        assert_eq!(qs[0], poly(3, 1, &[(&[1], -1)]));
        assert_eq!(qs[1], y);
        assert!(verify_split(&y, &qs, 1 << 20).unwrap());

        let sq = poly(5, 1, &[(&[2], 1)]);
        assert!(verify_split(&sq, &polynomial_split(&sq, 3).unwrap(), 1 << 20).unwrap());

        assert!(matches!(polynomial_split(&poly(2, 1, &[(&[1], 1)]), 3), Err(Error::Singular(_))));
        assert!(polynomial_split(&sq, 2).is_err());
        let wrong = vec![y.clone(), y.clone()];
        assert!(!verify_split(&y, &wrong, 1 << 20).unwrap());
    }

    #[test]
    fn split_holds_for_all_quadratics_over_f5() {
        for c0 in 0..5 {
            for c1 in 0..5 {
                for c2 in 0..5 {
                    let q = poly(5, 1, &[(&[0], c0), (&[1], c1), (&[2], c2)]);
                    assert!(verify_split(&q, &polynomial_split(&q, 3).unwrap(), 1 << 20).unwrap());
                }
            }
        }
        let mut rng = seeded(8);
        let mons = monomials(2, 2);
        for _ in 0..100 {
            let q = FpPolynomial::new(5, 2, mons.iter().map(|e| (e.clone(), rng.gen_range(0..5)))).unwrap();
            assert!(verify_split(&q, &polynomial_split(&q, 3).unwrap(), 1 << 20).unwrap());
        }
    }

    #[test]
    fn monomial_order() {
        assert_eq!(monomials(2, 2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn witness_search_cancels_phases() {
        let g = FiniteAbelianGroup::vector_space(3, 2).unwrap();
        let q = poly(3, 2, &[(&[2, 0], 1), (&[1, 1], 2), (&[0, 1], 1)]);
        let f = GroupFunction::from_fn(g.clone(), |x| phase(q.eval(x), 3));
        let w = witness_search(&f, 2, 1 << 20).unwrap();
        assert!(w.complete);
        assert!((w.correlation - 1.0).abs() < 1e-12);
        assert_eq!(w.poly, q.neg());

        let one = GroupFunction::constant(g.clone(), Complex64::new(1.0, 0.0));
        let w = witness_search(&one, 2, 1 << 20).unwrap();
        assert!(w.poly.is_zero());
        assert!((w.correlation - 1.0).abs() < 1e-12);

        let partial = witness_search(&f, 2, 10).unwrap();
        assert!(!partial.complete);
        assert!(matches!(witness_search(&f, 3, 1 << 20), Err(Error::Characteristic { p: 3, required: 4 })));
    }

    #[test]
    fn json_round_trip() {
        let q = poly(5, 2, &[(&[1, 1], 3), (&[0, 0], 1)]);
        assert_eq!(polynomial_from_json(&polynomial_to_json(&q)).unwrap(), q);
        let v: Value = serde_json::from_str(r#"{"p":3,"n":1,"coeffs":{"2":1}}"#).unwrap();
        assert_eq!(polynomial_from_json(&v).unwrap().degree(), Some(2));
    }
}
