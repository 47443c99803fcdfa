//! Exact analysis of the uniform angle game.
//!
//! In the uniform angle game the first `t-1` inputs are independent uniform
//! numbers in `[0, 1)` (angles in units of `2 pi / m`), the last input closes
//! the sum to an integer, and that integer mod `m` is the target. With
//! `S` the sum of the first `t-1` inputs, the last input is
//! `x = ceil(S) - S` and the target is `ceil(S) mod m`.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use super::poly::{isolate_roots, Poly, Root};
use super::AngleGameDiscrete;
use crate::error::{Error, Result};
use crate::rational::{int, rat, to_f64, Rational};
use crate::rng::{stream, Accumulator};

/// Polynomial pieces on consecutive intervals `[b_k, b_{k+1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewisePolynomial {
    pub breakpoints: Vec<Rational>,
    pub pieces: Vec<Poly>,
}

impl PiecewisePolynomial {
    /// Value at `x`; zero outside the domain.
    pub fn eval(&self, x: &Rational) -> Rational {
        let n = self.pieces.len();
        for k in 0..n {
            if &self.breakpoints[k] <= x && x < &self.breakpoints[k + 1] {
                return self.pieces[k].eval(x);
            }
        }
        Rational::zero()
    }

    /// Exact integral over `[a, b]` (clipped to the domain).
    pub fn integrate(&self, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        for (k, p) in self.pieces.iter().enumerate() {
            let lo = a.max(&self.breakpoints[k]);
            let hi = b.min(&self.breakpoints[k + 1]);
            if lo < hi {
                total += p.integrate(lo, hi);
            }
        }
        total
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Density of the sum of `n` independent uniform `[0, 1)` variables: on
/// `[k, k+1)` it is `1/(n-1)! * sum_{j<=k} (-1)^j C(n,j) (x-j)^(n-1)`.
pub fn irwin_hall_pdf(n: usize) -> Result<PiecewisePolynomial> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one summand required".into()));
    }
    let norm = Rational::new(BigInt::one(), factorial(n - 1));
    let mut pieces = Vec::with_capacity(n);
    let mut acc = Poly::zero();
    for k in 0..n {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let c = Rational::from_integer(binomial(BigInt::from(n), BigInt::from(k)) * sign);
        let term = Poly::linear(-int(k as i64), int(1)).pow(n - 1).scale(&c);
        acc = &acc + &term;
        pieces.push(acc.scale(&norm));
    }
    Ok(PiecewisePolynomial { breakpoints: (0..=n).map(|k| int(k as i64)).collect(), pieces })
}

/// For each answer `l`, the polynomial on `(0, 1)` giving the probability
/// that the target is `l` when the last input is `x`:
/// `sum over k = l mod m, 1 <= k <= t-1` of `f_{t-1}(k - x)`.
pub fn conditional_polynomials(t: usize, m: u32) -> Result<Vec<Poly>> {
    if t < 2 {
        return Err(Error::InvalidParameter("at least two players required".into()));
    }
    if m < 2 {
        return Err(Error::InvalidParameter("modulus must be at least 2".into()));
    }
    let n = t - 1;
    let pdf = irwin_hall_pdf(n)?;
    let mut out = vec![Poly::zero(); m as usize];
    for k in 1..=n {
        // k - x lies in (k-1, k), the piece with index k-1
        let shifted = pdf.pieces[k - 1].compose(&Poly::linear(int(k as i64), int(-1)));
        let l = k % m as usize;
        out[l] = &out[l] + &shifted;
    }
    Ok(out)
}

fn argmax(values: &[Rational]) -> usize {
    let mut best = 0;
    for (l, v) in values.iter().enumerate().skip(1) {
        if v > &values[best] {
            best = l;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileRow {
    pub x: Rational,
    /// Probability of each target given the last input `x`.
    pub probabilities: Vec<Rational>,
    /// Most likely target, ties toward the smallest.
    pub argmax: u32,
}

/// Conditional target probabilities at the grid midpoints
/// `x = (2i + 1) / (2 grid)`.
pub fn uag_conditional_profile(t: usize, m: u32, grid: usize) -> Result<Vec<ProfileRow>> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must have at least one point".into()));
    }
    let polys = conditional_polynomials(t, m)?;
    Ok((0..grid)
        .map(|i| {
            let x = rat(2 * i as i64 + 1, 2 * grid as i64);
            let probabilities: Vec<Rational> = polys.iter().map(|p| p.eval(&x)).collect();
            let argmax = argmax(&probabilities) as u32;
            ProfileRow { x, probabilities, argmax }
        })
        .collect())
}

/// CSV with header `x,l,probability,argmax`, one row per grid point and answer.
pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("x,l,probability,argmax\n");
    for r in rows {
        for (l, p) in r.probabilities.iter().enumerate() {
            out.push_str(&format!("{},{l},{p},{}\n", r.x, r.argmax));
        }
    }
    out
}

/// Maximal interval on which the last player's best answer is constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgmaxPiece {
    pub lo: Rational,
    pub hi: Rational,
    pub answer: u32,
}

/// Winning probability of the semi-trivial strategy. `lower == upper`
/// unless some switching point is irrational, in which case the value is
/// enclosed in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiTrivialValue {
    pub lower: Rational,
    pub upper: Rational,
    /// Points in `(0, 1)` where the best answer changes.
    pub breakpoints: Vec<Rational>,
    pub pieces: Vec<ArgmaxPiece>,
    /// Narrow intervals around irrational switching points.
    pub uncertain: Vec<(Rational, Rational)>,
}

impl SemiTrivialValue {
    pub fn exact(&self) -> Option<&Rational> {
        (self.lower == self.upper).then_some(&self.lower)
    }

    /// Best answer for last input `x`.
    pub fn answer_at(&self, x: f64) -> u32 {
        self.pieces
            .iter()
            .find(|p| x < to_f64(&p.hi))
            .or(self.pieces.last())
            .map_or(0, |p| p.answer)
    }
}

enum Segment {
    Certain(Rational, Rational),
    Uncertain(Rational, Rational),
}

/// Exact value of the strategy in which the first `t-1` players answer 0 and
/// the last player answers the most likely target given its input:
/// `integral over (0,1) of max_l g_l(x) dx`.
///
/// The unit interval is cut at every real root of every pairwise difference
/// `g_a - g_b`, located by Sturm sequences. Rational roots are certified
/// exactly; on each resulting piece the argmax is constant and the integral
/// is exact.
pub fn semi_trivial_value(t: usize, m: u32) -> Result<SemiTrivialValue> {
    let polys = conditional_polynomials(t, m)?;
    let (zero, one) = (int(0), int(1));
    let width = Rational::new(BigInt::one(), BigInt::one() << 200);
    let mut exact: Vec<Rational> = Vec::new();
    let mut fuzzy: Vec<(Rational, Rational)> = Vec::new();
    for a in 0..polys.len() {
        for b in a + 1..polys.len() {
            let d = &polys[a] - &polys[b];
            if d.is_zero() {
                continue;
            }
            for r in isolate_roots(&d, &zero, &one, &width) {
                match r {
                    Root::Exact(x) => exact.push(x),
                    Root::Between(lo, hi) => fuzzy.push((lo, hi)),
                }
            }
        }
    }
    // merge overlapping uncertain intervals and absorb exact points in them
    fuzzy.sort();
    let mut merged: Vec<(Rational, Rational)> = Vec::new();
    for (lo, hi) in fuzzy {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    exact.retain(|x| !merged.iter().any(|(lo, hi)| lo <= x && x <= hi));
    exact.sort();
    exact.dedup();

    let mut cuts: Vec<(Rational, bool)> = exact.into_iter().map(|x| (x, false)).collect();
    for (lo, _) in &merged {
        cuts.push((lo.clone(), true));
    }
    cuts.sort();
    let mut segments = Vec::new();
    let mut pos = zero.clone();
    let mut fuzzy_iter = merged.iter();
    for (x, starts_fuzzy) in cuts {
        if pos < x {
            segments.push(Segment::Certain(pos.clone(), x.clone()));
        }
        if starts_fuzzy {
            let (lo, hi) = fuzzy_iter.next().expect("matching interval");
            segments.push(Segment::Uncertain(lo.clone(), hi.clone()));
            pos = hi.clone();
        } else {
            pos = x;
        }
    }
    if pos < one {
        segments.push(Segment::Certain(pos, one.clone()));
    }

    let mut lower = Rational::zero();
    let mut upper = Rational::zero();
    let mut pieces: Vec<ArgmaxPiece> = Vec::new();
    let mut uncertain = Vec::new();
    let two = int(2);
    for seg in segments {
        match seg {
            Segment::Certain(lo, hi) => {
                let mid = (&lo + &hi) / &two;
                let vals: Vec<Rational> = polys.iter().map(|p| p.eval(&mid)).collect();
                let l = argmax(&vals);
                let v = polys[l].integrate(&lo, &hi);
                lower += &v;
                upper += v;
                match pieces.last_mut() {
                    Some(last) if last.answer == l as u32 && last.hi == lo => last.hi = hi,
                    _ => pieces.push(ArgmaxPiece { lo, hi, answer: l as u32 }),
                }
            }
            Segment::Uncertain(lo, hi) => {
                // the conditional probabilities lie in [0, 1]
                let best = polys.iter().map(|p| p.integrate(&lo, &hi)).max().unwrap_or_default();
                lower += best;
                upper += &hi - &lo;
                uncertain.push((lo, hi));
            }
        }
    }
    let breakpoints = pieces.windows(2).map(|w| w[1].lo.clone()).collect();
    Ok(SemiTrivialValue { lower, upper, breakpoints, pieces, uncertain })
}

/// Answer rule of a strategy for the uniform angle game.
pub trait AngleOracle: Sync {
    /// Answer of `player` on input `phi` in `[0, 1)` (units of `2 pi / m`).
    fn answer(&self, player: usize, phi: f64) -> u32;
}

/// First `t-1` players answer 0, the last answers the most likely target.
#[derive(Debug, Clone)]
pub struct SemiTrivialOracle {
    pub players: usize,
    pub value: SemiTrivialValue,
}

impl SemiTrivialOracle {
    pub fn new(t: usize, m: u32) -> Result<Self> {
        Ok(Self { players: t, value: semi_trivial_value(t, m)? })
    }
}

impl AngleOracle for SemiTrivialOracle {
    fn answer(&self, player: usize, phi: f64) -> u32 {
        if player + 1 == self.players {
            self.value.answer_at(phi)
        } else {
            0
        }
    }
}

/// Splits `samples` into fixed-size batches, each with its own random
/// stream, so the estimate does not depend on the number of workers.
fn monte_carlo<F>(seed: u64, samples: usize, trial: F) -> (f64, f64)
where
    F: Fn(&mut crate::rng::SeededRng) -> f64 + Sync,
{
    const BATCH: usize = 1 << 14;
    let batches = samples.div_ceil(BATCH);
    let accs: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut acc = Accumulator::default();
            let n = BATCH.min(samples - b * BATCH);
            for _ in 0..n {
                acc.push(trial(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    for a in &accs {
        total.merge(a);
    }
    (total.mean(), total.stderr())
}

/// Draws an input of the uniform angle game: `(phi_1..phi_t, target)`.
pub fn sample_uag<R: Rng + ?Sized>(t: usize, m: u32, rng: &mut R) -> (Vec<f64>, u32) {
    let mut phi: Vec<f64> = (0..t - 1).map(|_| rng.gen::<f64>()).collect();
    let s: f64 = phi.iter().sum();
    let c = s.ceil();
    let last = c - s;
    phi.push(if last >= 1.0 { 0.0 } else { last });
    (phi, (c as u64 % m as u64) as u32)
}

/// Monte Carlo estimate `(mean, stderr)` of the shared-randomness strategy
/// in which each player rounds `t * phi_i` down to `x_i`, the players share
/// guesses `r_1..r_{t-1}` of the first `x_i`, the last player answers
/// `ceil((r_1 + ... + r_{t-1} + x_t) / t) mod m`, and every other player
/// answers 0 when its guess is right and uniformly at random otherwise.
/// The exact value is `1/m + (m-1)/m * t^(1-t)`.
pub fn floor_strategy_trial(t: usize, m: u32, seed: u64, samples: usize) -> Result<(f64, f64)> {
    if t < 2 || m < 2 || samples == 0 {
        return Err(Error::InvalidParameter("need t >= 2, m >= 2 and at least one sample".into()));
    }
    Ok(monte_carlo(seed, samples, |rng| {
        let (phi, target) = sample_uag(t, m, rng);
        let x: Vec<u64> = phi.iter().map(|p| ((t as f64 * p).floor() as u64).min(t as u64 - 1)).collect();
        let r: Vec<u64> = (0..t - 1).map(|_| rng.gen_range(0..t as u64)).collect();
        let mut sum = 0u64;
        for i in 0..t - 1 {
            let a = if r[i] == x[i] { 0 } else { rng.gen_range(0..m as u64) };
            sum += a;
        }
        let total = r.iter().sum::<u64>() + x[t - 1];
        sum += total.div_ceil(t as u64) % m as u64;
        if sum % m as u64 == target as u64 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Exact value of the floor strategy.
pub fn floor_strategy_value(t: usize, m: u32) -> Rational {
    let tt = Rational::from_integer(BigInt::from(t).pow(t as u32 - 1));
    rat(1, m as i64) + rat(m as i64 - 1, m as i64) / tt
}

/// Plays an angle game through a strategy for the uniform angle game.
///
/// Inputs are scaled to `[0, m)`, rotated by shared uniform offsets (the
/// last player undoes their sum), and split into an integer part `l_j` and a
/// fractional part, which is distributed as an input of the uniform angle
/// game. Each player answers the oracle's answer plus `l_j`.
pub fn reduce_to_uag(
    g: &AngleGameDiscrete,
    oracle: &dyn AngleOracle,
    seed: u64,
    samples: usize,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample required".into()));
    }
    let t = g.players();
    let m = g.modulus();
    let mf = m as f64;
    let game = g.game();
    let weights: Vec<f64> = game.support().iter().map(|e| to_f64(&e.weight)).collect();
    let angles: Vec<Vec<f64>> = g.angles().iter().map(|v| v.iter().map(to_f64).collect()).collect();
    Ok(monte_carlo(seed, samples, |rng| {
        let mut u = rng.gen::<f64>();
        let mut idx = weights.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                idx = i;
                break;
            }
            u -= w;
        }
        let e = &game.support()[idx];
        let offsets: Vec<f64> = (0..t - 1).map(|_| rng.gen::<f64>() * mf).collect();
        let shift: f64 = offsets.iter().sum();
        let mut sum = 0u64;
        for j in 0..t {
            let base = mf * angles[j][e.x[j]];
            let rotated = if j + 1 < t { base + offsets[j] } else { base - shift };
            let theta = rotated.rem_euclid(mf);
            let l = theta.floor();
            let frac = theta - l;
            let a = oracle.answer(j, if frac >= 1.0 { 0.0 } else { frac });
            sum += a as u64 + l as u64;
        }
        if sum % m as u64 == e.target as u64 {
            1.0
        } else {
            0.0
        }
    }))
}
