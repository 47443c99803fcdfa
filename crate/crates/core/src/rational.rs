//! Exact rationals and their `"p/q"` string form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"n"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let n: BigInt = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    Ok(Rational::from_integer(n))
}

/// Accepts either a JSON string (`"3/4"`) or a JSON number.
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                parse_rational(&n.to_string())
            }
        }
        other => Err(Error::Parse(format!("expected rational, got {other}"))),
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn lcm_of_denominators<'a>(it: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    it.into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Rescales nonnegative rationals to integers over their common denominator.
/// Returns `None` when the scaled values do not fit in `u64`.
pub fn scale_to_u64(values: &[Rational]) -> Option<(Vec<u64>, BigInt)> {
    let l = lcm_of_denominators(values);
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        let scaled = v * Rational::from_integer(l.clone());
        out.push(scaled.to_integer().to_u64()?);
    }
    Some((out, l))
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn best_approximation(x: f64, max_den: u64) -> Rational {
    let neg = x < 0.0;
    let x_abs = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut frac = x_abs;
    loop {
        let a = frac.floor();
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 {
            // largest semiconvergent still within the bound
            let k = (max_den as i128 - q0) / q1.max(1);
            let ps = k * p1 + p0;
            let qs = k * q1 + q0;
            let cand_conv = (p1, q1);
            let err_conv = (x_abs - p1 as f64 / q1 as f64).abs();
            let err_semi = if qs > 0 { (x_abs - ps as f64 / qs as f64).abs() } else { f64::INFINITY };
            let (p, q) = if err_semi < err_conv { (ps, qs) } else { cand_conv };
            let r = Rational::new(BigInt::from(p), BigInt::from(q));
            return if neg { -r } else { r };
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let rem = frac - a;
        if rem < 1e-15 || q1 as f64 > 1e15 {
            let r = Rational::new(BigInt::from(p1), BigInt::from(q1));
            return if neg { -r } else { r };
        }
        frac = 1.0 / rem;
    }
}

/// Snaps `x` to a rational with denominator `<= max_den` when one lies within `tol`.
pub fn snap(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    let r = best_approximation(x, max_den);
    if (to_f64(&r) - x).abs() <= tol {
        Some(r)
    } else {
        None
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

pub fn is_integer(r: &Rational) -> bool {
    r.is_integer()
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

pub mod serde_str {
    //! `serde` adapters writing rationals as `"p/q"` strings.
    use super::{rational_from_json, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        rational_from_json(&v).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&r.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<serde_json::Value>::deserialize(d)?;
            v.iter()
                .map(|x| rational_from_json(x).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
