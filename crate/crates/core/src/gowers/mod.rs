//! Uniformity norms on finite abelian groups, linear-forms games and the
//! polynomial/rounding tools that turn correlation with a phase into a
//! classical strategy.

mod forms;
mod poly;
mod rounding;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub use forms::{
    cs_complexity, gowers_product_check, line_game, linear_forms_bias, linear_forms_strategy_bias,
    modified_magic_square_tau, parallel_repetition_bound, predicate_from_json, von_neumann_check, AffineForm,
    CsComplexity, LinearFormsBias, LinearFormsGame, LinearFormsSystem, VonNeumannReport,
};
pub use poly::{
    polynomial_from_json, polynomial_split, polynomial_to_json, verify_split, witness_search, FpPolynomial,
    WitnessSearch,
};
pub use rounding::{complex_round, rounding_identity_estimate, strategy_from_witness, ComplexRounding, WitnessStrategy};

/// Default cap on evaluated terms for norms and searches.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// `Z_{n_1} x ... x Z_{n_r}`, elements indexed row-major (coordinate 0
/// most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    moduli: Vec<u64>,
}

impl FiniteAbelianGroup {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() || moduli.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter(format!("group moduli must be >= 2, got {moduli:?}")));
        }
        let order = moduli.iter().try_fold(1u64, |a, &n| a.checked_mul(n));
        if order.is_none_or(|o| o > u32::MAX as u64) {
            return Err(Error::InvalidParameter("group too large".into()));
        }
        Ok(Self { moduli })
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `F_p^n` as an additive group.
    pub fn vector_space(p: u64, n: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        Self::new(vec![p; n])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> usize {
        self.moduli.iter().product::<u64>() as usize
    }

    /// Least order of a non-identity element: the smallest prime dividing a modulus.
    pub fn characteristic(&self) -> u64 {
        self.moduli.iter().map(|&n| smallest_prime_factor(n)).min().expect("nonempty")
    }

    /// Least common multiple of the moduli.
    pub fn exponent(&self) -> u64 {
        self.moduli.iter().fold(1, |a, &n| num_integer::lcm(a, n))
    }

    /// `Some(p)` when the group is `F_p^n`.
    pub fn prime_field(&self) -> Option<u64> {
        let p = self.moduli[0];
        (is_prime(p) && self.moduli.iter().all(|&n| n == p)).then_some(p)
    }

    /// `Gamma^k`.
    pub fn power(&self, k: usize) -> Result<Self> {
        Self::new(self.moduli.repeat(k))
    }

    pub fn coords(&self, mut idx: usize) -> Vec<u64> {
        let mut c = vec![0; self.moduli.len()];
        for i in (0..self.moduli.len()).rev() {
            c[i] = idx as u64 % self.moduli[i];
            idx /= self.moduli[i] as usize;
        }
        c
    }

    pub fn index(&self, coords: &[u64]) -> usize {
        coords.iter().zip(&self.moduli).fold(0, |a, (&c, &n)| a * n as usize + (c % n) as usize)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let sum: Vec<u64> = ca.iter().zip(&cb).zip(&self.moduli).map(|((x, y), n)| (x + y) % n).collect();
        self.index(&sum)
    }

    pub fn neg(&self, a: usize) -> usize {
        let c: Vec<u64> = self.coords(a).iter().zip(&self.moduli).map(|(x, n)| (n - x) % n).collect();
        self.index(&c)
    }

    /// `c * a` for an integer `c`.
    pub fn scale(&self, c: i64, a: usize) -> usize {
        let out: Vec<u64> = self
            .coords(a)
            .iter()
            .zip(&self.moduli)
            .map(|(&x, &n)| ((c.rem_euclid(n as i64) as u64) * x) % n)
            .collect();
        self.index(&out)
    }

    /// `add_table[a * |G| + b] = a + b`.
    pub fn add_table(&self) -> Vec<u32> {
        let n = self.order();
        let coords: Vec<Vec<u64>> = (0..n).map(|i| self.coords(i)).collect();
        let mut table = Vec::with_capacity(n * n);
        for a in &coords {
            for b in &coords {
                let s: Vec<u64> = a.iter().zip(b).zip(&self.moduli).map(|((x, y), m)| (x + y) % m).collect();
                table.push(self.index(&s) as u32);
            }
        }
        table
    }
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn smallest_prime_factor(n: u64) -> u64 {
    (2..).take_while(|d| d * d <= n).find(|d| n % d == 0).unwrap_or(n)
}

/// Complex-valued function on a finite abelian group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    group: FiniteAbelianGroup,
    values: Vec<Complex64>,
}

impl GroupFunction {
    pub fn new(group: FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a group of order {}",
                values.len(),
                group.order()
            )));
        }
        Ok(Self { group, values })
    }

    pub fn from_fn(group: FiniteAbelianGroup, f: impl Fn(&[u64]) -> Complex64) -> Self {
        let values = (0..group.order()).map(|i| f(&group.coords(i))).collect();
        Self { group, values }
    }

    pub fn constant(group: FiniteAbelianGroup, c: Complex64) -> Self {
        let values = vec![c; group.order()];
        Self { group, values }
    }

    /// `(-1)^rho` for a predicate `rho` with values in `{0, 1}`.
    pub fn sign_of(group: FiniteAbelianGroup, rho: &[u8]) -> Result<Self> {
        let values = rho.iter().map(|&r| Complex64::new(if r % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        Self::new(group, values)
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_one_bounded(&self) -> bool {
        self.values.iter().all(|v| v.norm() <= 1.0 + 1e-12)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// `f^k(g_1, ..., g_k) = prod_i f(g_i)` on `Gamma^k`.
    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        let group = self.group.power(k)?;
        let n = self.values.len();
        let values = (0..group.order())
            .map(|mut idx| {
                let mut v = Complex64::new(1.0, 0.0);
                for _ in 0..k {
                    v *= self.values[idx % n];
                    idx /= n;
                }
                v
            })
            .collect();
        Ok(Self { group, values })
    }
}

/// `E_h |U^(s-1) of Delta_h f|^(2^(s-1))`, with `Delta_h f(x) = f(x+h) conj f(x)`.
fn inner(values: &[Complex64], add: &[u32], s: u32) -> f64 {
    let n = values.len();
    if s == 1 {
        let m = values.iter().sum::<Complex64>() / n as f64;
        return m.norm_sqr();
    }
    let mut acc = 0.0;
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for h in 0..n {
        for x in 0..n {
            d[x] = values[add[x * n + h] as usize] * values[x].conj();
        }
        acc += inner(&d, add, s - 1);
    }
    acc / n as f64
}

/// `||f||_{U^s}^(2^s)`, the averaged `2^s`-fold derivative.
pub fn gowers_inner(f: &GroupFunction, s: u32, budget: u128) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidParameter("Gowers norms start at s = 1".into()));
    }
    let n = f.values.len() as u128;
    let needed = n.checked_pow(s + 1).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let add = f.group.add_table();
    let nn = f.values.len();
    if s == 1 {
        return Ok(inner(&f.values, &add, 1));
    }
    // outermost derivative split across workers, summed in order
    let parts: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|h| {
            let d: Vec<Complex64> = (0..nn).map(|x| f.values[add[x * nn + h] as usize] * f.values[x].conj()).collect();
            inner(&d, &add, s - 1)
        })
        .collect();
    Ok(parts.iter().sum::<f64>() / nn as f64)
}

pub fn gowers_norm(f: &GroupFunction, s: u32) -> Result<f64> {
    gowers_norm_with(f, s, DEFAULT_BUDGET)
}

pub fn gowers_norm_with(f: &GroupFunction, s: u32, budget: u128) -> Result<f64> {
    let v = gowers_inner(f, s, budget)?;
    assert!(v >= -1e-9, "negative Gowers inner expectation {v}");
    Ok(v.max(0.0).powf(1.0 / f64::from(1u32 << s)))
}

pub fn function_from_json(v: &Value) -> Result<GroupFunction> {
    let moduli: Vec<u64> = v
        .get("moduli")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing \"moduli\" array".into()))?
        .iter()
        .map(|m| m.as_u64().ok_or_else(|| Error::Parse("moduli must be integers".into())))
        .collect::<Result<_>>()?;
    let values = v
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing \"values\" array".into()))?
        .iter()
        .map(|c| match c {
            Value::Number(x) => x.as_f64().map(|re| Complex64::new(re, 0.0)),
            Value::Array(p) if p.len() == 2 => Some(Complex64::new(p[0].as_f64()?, p[1].as_f64()?)),
            _ => None,
        })
        .map(|c| c.ok_or_else(|| Error::Parse("values must be numbers or [re, im] pairs".into())))
        .collect::<Result<_>>()?;
    GroupFunction::new(FiniteAbelianGroup::new(moduli)?, values)
}

pub fn function_to_json(f: &GroupFunction) -> Value {
    json!({
        "moduli": f.group.moduli,
        "values": f.values.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    })
}

/// `e(r / p) = exp(2 pi i r / p)`.
pub(crate) fn phase(r: u64, p: u64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (r % p) as f64 / p as f64)
}
