use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::forms::{linear_forms_strategy_bias, AffineForm, LinearFormsGame};
use super::poly::{polynomial_split, FpPolynomial};
use super::phase;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::rng::{stream, uniform, Accumulator};

const BATCH: usize = 1 << 14;

fn sign_re(z: Complex64) -> f64 {
    if z.re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn unit_uniform(rng: &mut crate::rng::SeededRng) -> Complex64 {
    Complex64::from_polar(1.0, TAU * uniform(rng))
}

/// Monte Carlo estimate of `(pi/2) E_w[sign(Re(z conj w)) |z| w]` over
/// uniform unit `w`; returns the mean and the standard errors of its real
/// and imaginary parts.
pub fn rounding_identity_estimate(z: Complex64, seed: u64, samples: usize) -> (Complex64, f64, f64) {
    let batches = samples.div_ceil(BATCH);
    let accs: Vec<(Accumulator, Accumulator)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
            for _ in 0..BATCH.min(samples - b * BATCH) {
                let w = unit_uniform(&mut rng);
                let v = FRAC_PI_2 * sign_re(z * w.conj()) * z.norm() * w;
                re.push(v.re);
                im.push(v.im);
            }
            (re, im)
        })
        .collect();
    let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
    for (a, b) in &accs {
        re.merge(a);
        im.merge(b);
    }
    (Complex64::new(re.mean(), im.mean()), re.stderr(), im.stderr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRounding {
    /// Best rounded `+-1` strategies seen.
    pub strategies: Vec<Vec<i8>>,
    pub best_bias: Rational,
    /// Mean and standard error of the rounded bias `|E f prod a_i|`.
    pub mean_bias: f64,
    pub mean_bias_se: f64,
    /// `E_g f(psi_0) prod_i z_i(psi_i)` for the unit strategies.
    pub complex_bias: Complex64,
    /// Unbiased estimate of `complex_bias`:
    /// `(pi/2)^t prod_i w_i` times the signed rounded bias.
    pub estimate: Complex64,
    pub estimate_se: (f64, f64),
}

/// Rounds unit-modulus strategies `z_i` to `a_i(x) = sign Re(z_i(x) conj w_i)`
/// with one uniform unit `w_i` per player and sample, `sign(0) = +1`.
pub fn complex_round(
    game: &LinearFormsGame,
    strategies: &[Vec<Complex64>],
    seed: u64,
    samples: usize,
) -> Result<ComplexRounding> {
    let t = game.players();
    let n = game.system().group().order();
    if strategies.len() != t || strategies.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch("one value per player and group element is required".into()));
    }
    if strategies.iter().flatten().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidParameter("rounding needs unit-modulus strategies".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let rows = game.system().rows();
    let signs: Vec<i64> = rows.iter().map(|r| if game.rho()[r[0] as usize] == 0 { 1 } else { -1 }).collect();
    let complex_bias = rows
        .iter()
        .zip(&signs)
        .map(|(r, &s)| r[1..].iter().enumerate().fold(Complex64::new(s as f64, 0.0), |acc, (i, &q)| acc * strategies[i][q as usize]))
        .sum::<Complex64>()
        / rows.len() as f64;
    let scale = FRAC_PI_2.powi(t as i32);

    struct Batch {
        bias: Accumulator,
        re: Accumulator,
        im: Accumulator,
        best: (i64, Vec<Vec<i8>>),
    }
    let batches = samples.div_ceil(BATCH);
    let results: Vec<Batch> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut out = Batch {
                bias: Accumulator::default(),
                re: Accumulator::default(),
                im: Accumulator::default(),
                best: (-1, Vec::new()),
            };
            for _ in 0..BATCH.min(samples - b * BATCH) {
                let ws: Vec<Complex64> = (0..t).map(|_| unit_uniform(&mut rng)).collect();
                let a: Vec<Vec<i8>> = strategies
                    .iter()
                    .zip(&ws)
                    .map(|(s, w)| s.iter().map(|z| sign_re(z * w.conj()) as i8).collect())
                    .collect();
                let sum: i64 = rows
                    .iter()
                    .zip(&signs)
                    .map(|(r, &s)| r[1..].iter().enumerate().fold(s, |acc, (i, &q)| acc * a[i][q as usize] as i64))
                    .sum();
                let signed = sum as f64 / rows.len() as f64;
                out.bias.push(signed.abs());
                let est = scale * signed * ws.iter().product::<Complex64>();
                out.re.push(est.re);
                out.im.push(est.im);
                if sum.abs() > out.best.0 {
                    out.best = (sum.abs(), a);
                }
            }
            out
        })
        .collect();
    let (mut bias, mut re, mut im) = (Accumulator::default(), Accumulator::default(), Accumulator::default());
    let mut best: (i64, Vec<Vec<i8>>) = (-1, Vec::new());
    for r in results {
        bias.merge(&r.bias);
        re.merge(&r.re);
        im.merge(&r.im);
        if r.best.0 > best.0 {
            best = r.best;
        }
    }
    let best_bias = linear_forms_strategy_bias(game, &best.1)?;
    Ok(ComplexRounding {
        strategies: best.1,
        best_bias,
        mean_bias: bias.mean(),
        mean_bias_se: bias.stderr(),
        complex_bias,
        estimate: Complex64::new(re.mean(), im.mean()),
        estimate_se: (re.stderr(), im.stderr()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessStrategy {
    /// `P_1, ..., P_t` with `P(y) = sum_i P_i(x + (i - 1) y)`.
    pub split: Vec<FpPolynomial>,
    /// `|E f(psi_0) prod_i e(P_i(psi_i) / p)|`.
    pub correlation: f64,
    pub rounding: ComplexRounding,
}

/// Splits a witness polynomial across the players of a line game, plays
/// the phases `e(P_i / p)` and rounds them to `+-1` strategies.
pub fn strategy_from_witness(
    game: &LinearFormsGame,
    poly: &FpPolynomial,
    seed: u64,
    samples: usize,
) -> Result<WitnessStrategy> {
    let t = game.players();
    let group = game.system().group();
    let p = group
        .prime_field()
        .ok_or_else(|| Error::Unsupported("witness strategies need a line game over F_p^n".into()))?;
    let line: Vec<AffineForm> =
        std::iter::once(AffineForm::linear(vec![0, 1])).chain((1..=t).map(|i| AffineForm::linear(vec![1, i as i64 - 1]))).collect();
    if game.system().forms() != line.as_slice() {
        return Err(Error::Unsupported("witness strategies need a line game".into()));
    }
    if poly.p() != p || poly.n() != group.rank() {
        return Err(Error::DimensionMismatch(format!("polynomial over F_{}^{} for a game over F_{p}^{}", poly.p(), poly.n(), group.rank())));
    }
    if p < t as u64 {
        return Err(Error::Characteristic { p, required: t as u64 });
    }
    let split = polynomial_split(poly, t)?;
    let n = group.order();
    let strategies: Vec<Vec<Complex64>> =
        split.iter().map(|q| (0..n).map(|x| phase(q.eval(&group.coords(x)), p)).collect()).collect();
    let rounding = complex_round(game, &strategies, seed, samples)?;
    Ok(WitnessStrategy { correlation: rounding.complex_bias.norm(), split, rounding })
}
