//! Univariate polynomials over the rationals, Sturm sequences and exact
//! root isolation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Coefficients in ascending order of degree, without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`.
    pub fn linear(a: Rational, b: Rational) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + crate::rational::to_f64(c))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::constant(Rational::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `p(q(x))`.
    pub fn compose(&self, q: &Poly) -> Self {
        let mut acc = Poly::zero();
        for c in self.0.iter().rev() {
            acc = &(&acc * q) + &Poly::constant(c.clone());
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Self {
        let mut out = vec![Rational::zero()];
        for (i, c) in self.0.iter().enumerate() {
            out.push(c / Rational::from_integer(BigInt::from(i + 1)));
        }
        Self::new(out)
    }

    pub fn integrate(&self, a: &Rational, b: &Rational) -> Rational {
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }

    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.0.len() - 1;
        let lead = d.leading();
        let mut rem = self.0.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (i, di) in d.0.iter().enumerate() {
                    rem[k + i] -= &c * di;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.leading();
        self.scale(&(Rational::one() / l))
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Product of the distinct irreducible factors (same roots, all simple).
    pub fn squarefree(&self) -> Poly {
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        self.div_rem(&g).0.monic()
    }

    /// Scalar multiple with coprime integer coefficients; returns its
    /// leading coefficient.
    pub fn primitive_leading(&self) -> BigInt {
        let den = self.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.0.iter().map(|c| (c * Rational::from_integer(den.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            return BigInt::zero();
        }
        (ints.last().unwrap() / g).abs()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly::new(
            (0..n)
                .map(|i| {
                    let a = self.0.get(i).cloned().unwrap_or_else(Rational::zero);
                    a + o.0.get(i).cloned().unwrap_or_else(Rational::zero)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c})x"),
                _ => format!("({c})x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Sturm sequence `p, p', -rem(p, p'), ...`.
pub fn sturm_sequence(p: &Poly) -> Vec<Poly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            break;
        }
        let r = seq[n - 2].div_rem(&seq[n - 1]).1;
        if r.is_zero() {
            break;
        }
        seq.push(-&r);
    }
    seq
}

fn sign_changes(seq: &[Poly], x: &Rational) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for p in seq {
        let v = p.eval(x);
        let s = if v.is_positive() { 1 } else if v.is_negative() { -1 } else { 0 };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}

/// Number of distinct real roots in `(a, b]`.
pub fn count_roots(seq: &[Poly], a: &Rational, b: &Rational) -> usize {
    sign_changes(seq, a).saturating_sub(sign_changes(seq, b))
}

/// A real root located either exactly or inside a narrow interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Root {
    Exact(Rational),
    /// An irrational root in the open interval.
    Between(Rational, Rational),
}

/// Simplest rational (smallest denominator) in the closed interval `[a, b]`.
pub fn simplest_between(a: &Rational, b: &Rational) -> Rational {
    let fl = a.floor();
    if &fl == a {
        return fl;
    }
    let next = &fl + Rational::one();
    if &next <= b {
        return next;
    }
    let inner = simplest_between(&(Rational::one() / (b - &fl)), &(Rational::one() / (a - &fl)));
    fl + Rational::one() / inner
}

/// Real roots of `p` in the open interval `(lo, hi)`, each rational root
/// reported exactly. Irrational roots are enclosed in intervals of width
/// below `width`.
pub fn isolate_roots(p: &Poly, lo: &Rational, hi: &Rational, width: &Rational) -> Vec<Root> {
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let sq = p.squarefree();
    let seq = sturm_sequence(&sq);
    let lead = sq.primitive_leading();
    // two rationals with denominators dividing `lead` are at least
    // 1/lead^2 apart, so narrower intervals hold at most one candidate
    let cert_width = Rational::new(BigInt::one(), &lead * &lead);
    let mut roots = Vec::new();
    let mut stack = vec![(lo.clone(), hi.clone())];
    let two = Rational::from_integer(BigInt::from(2));
    while let Some((a, b)) = stack.pop() {
        let mut n = count_roots(&seq, &a, &b);
        if sq.eval(&b).is_zero() {
            if &b < hi {
                roots.push(Root::Exact(b.clone()));
            }
            n -= 1;
        }
        if n == 0 {
            continue;
        }
        if n == 1 && &b - &a < cert_width {
            roots.push(certify(&sq, &seq, a, b, width));
            continue;
        }
        let mid = (&a + &b) / &two;
        stack.push((mid.clone(), b));
        stack.push((a, mid));
    }
    roots.sort_by(|x, y| root_key(x).cmp(root_key(y)));
    roots
}

fn root_key(r: &Root) -> &Rational {
    match r {
        Root::Exact(x) | Root::Between(x, _) => x,
    }
}

/// `(a, b)` holds exactly one root, which is not `b`.
fn certify(p: &Poly, seq: &[Poly], mut a: Rational, mut b: Rational, width: &Rational) -> Root {
    let c = simplest_between(&a, &b);
    if c > a && p.eval(&c).is_zero() {
        return Root::Exact(c);
    }
    let two = Rational::from_integer(BigInt::from(2));
    while &(&b - &a) >= width {
        let mid = (&a + &b) / &two;
        if p.eval(&mid).is_zero() {
            return Root::Exact(mid);
        }
        if count_roots(seq, &a, &mid) == 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Root::Between(a, b)
}
