//! Explicit finite-dimensional quantum strategies for MOD-m games.
//!
//! A strategy is a pure state on `C^{d_1} x ... x C^{d_t}` together with one
//! projective measurement per player and question. Outcomes are answers in
//! the game's answer group.

mod json;
mod operator;
mod schmidt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::angle::AngleGameDiscrete;
use crate::error::{Error, Result};
use crate::game::{DeterministicStrategy, ModMGame};
use crate::rng::{seeded, Accumulator};

pub use json::{matrix_from_json, matrix_to_json, schmidt_spec_from_json, schmidt_spec_to_json, strategy_from_json, strategy_to_json};
pub use operator::{operator_cs_check, operator_norm};
pub use schmidt::{verify_schmidt_perfection, SchmidtStrategySpec};

pub type CMatrix = DMatrix<Complex64>;

/// Default tolerance for projector and normalization checks.
pub const TOLERANCE: f64 = 1e-9;

/// Largest total Hilbert space dimension accepted.
pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    local_dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(local_dims: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let total = local_dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if local_dims.is_empty() || local_dims.contains(&0) || total != Some(amplitudes.len()) {
            return Err(Error::DimensionMismatch(format!(
                "local dimensions {local_dims:?} do not match {} amplitudes",
                amplitudes.len()
            )));
        }
        if amplitudes.len() > MAX_DIMENSION {
            return Err(Error::DimensionMismatch(format!("total dimension {} too large", amplitudes.len())));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidParameter(format!("state has squared norm {norm}, expected 1")));
        }
        Ok(Self { local_dims, amplitudes })
    }

    /// `sum_i c_i |i>|i>...|i>` on `t` systems of dimension `c.len()`.
    pub fn schmidt(t: usize, c: &[f64]) -> Result<Self> {
        let d = c.len();
        let dims = vec![d; t];
        let total: usize = d.pow(t as u32);
        let mut amps = vec![Complex64::new(0.0, 0.0); total];
        let stride: usize = (0..t).map(|j| d.pow(j as u32)).sum();
        for (i, &ci) in c.iter().enumerate() {
            amps[i * stride] = Complex64::new(ci, 0.0);
        }
        Self::new(dims, amps)
    }

    pub fn ghz(t: usize, d: usize) -> Result<Self> {
        Self::schmidt(t, &vec![1.0 / (d as f64).sqrt(); d])
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Applies `op` to tensor factor `j` of `v` (row-major, factor 0 slowest).
pub fn apply_local(dims: &[usize], v: &[Complex64], j: usize, op: &CMatrix) -> Vec<Complex64> {
    let d = dims[j];
    let right: usize = dims[j + 1..].iter().product();
    let left = v.len() / (d * right);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for l in 0..left {
        for i in 0..d {
            for k in 0..d {
                let c = op[(i, k)];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let (dst, src) = ((l * d + i) * right, (l * d + k) * right);
                for r in 0..right {
                    out[dst + r] += c * v[src + r];
                }
            }
        }
    }
    out
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Largest deviation of `ops` from a projective measurement: Hermitian,
/// idempotent, pairwise orthogonal and complete.
pub fn projective_residual(ops: &[CMatrix]) -> f64 {
    let Some(first) = ops.first() else { return f64::INFINITY };
    let d = first.nrows();
    if ops.iter().any(|p| p.nrows() != d || p.ncols() != d) {
        return f64::INFINITY;
    }
    let max_abs = |m: &CMatrix| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut sum = CMatrix::zeros(d, d);
    for (a, p) in ops.iter().enumerate() {
        worst = worst.max(max_abs(&(p - p.adjoint())));
        worst = worst.max(max_abs(&(p * p - p)));
        for q in &ops[a + 1..] {
            worst = worst.max(max_abs(&(p * q)));
        }
        sum += p;
    }
    worst.max(max_abs(&(sum - CMatrix::identity(d, d))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    pub state: PureState,
    /// `measurements[j][q][a]` is player `j`'s projector for answer `a` on
    /// question index `q`.
    pub measurements: Vec<Vec<Vec<CMatrix>>>,
}

impl QuantumStrategy {
    pub fn new(state: PureState, measurements: Vec<Vec<Vec<CMatrix>>>) -> Result<Self> {
        Self::with_tolerance(state, measurements, TOLERANCE)
    }

    pub fn with_tolerance(state: PureState, measurements: Vec<Vec<Vec<CMatrix>>>, tol: f64) -> Result<Self> {
        if measurements.len() != state.local_dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} players measured but the state has {} systems",
                measurements.len(),
                state.local_dims.len()
            )));
        }
        for (j, per_q) in measurements.iter().enumerate() {
            for (q, ops) in per_q.iter().enumerate() {
                if ops.iter().any(|p| p.nrows() != state.local_dims[j] || p.ncols() != state.local_dims[j]) {
                    return Err(Error::DimensionMismatch(format!(
                        "player {j} question {q}: projectors must be {0}x{0}",
                        state.local_dims[j]
                    )));
                }
                let r = projective_residual(ops);
                if r > tol {
                    return Err(Error::NonProjective(format!(
                        "player {j} question {q}: residual {r:e} exceeds {tol:e}"
                    )));
                }
            }
        }
        Ok(Self { state, measurements })
    }

    /// Deterministic strategy as rank-one projectors on a one-dimensional
    /// product state.
    pub fn from_deterministic(game: &ModMGame, s: &DeterministicStrategy) -> Result<Self> {
        let a = game.answers().size() as usize;
        let state = PureState::new(vec![1; game.players()], vec![Complex64::new(1.0, 0.0)])?;
        let measurements = (0..game.players())
            .map(|j| {
                (0..game.question_count(j))
                    .map(|q| {
                        (0..a)
                            .map(|b| {
                                let v = if s.answers[j][q] as usize == b { 1.0 } else { 0.0 };
                                CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(state, measurements)
    }

    fn check_against(&self, game: &ModMGame) -> Result<()> {
        if self.measurements.len() != game.players() {
            return Err(Error::DimensionMismatch("player count differs from the game".into()));
        }
        let a = game.answers().size() as usize;
        for j in 0..game.players() {
            if self.measurements[j].len() < game.question_count(j) {
                return Err(Error::IncompleteStrategy { player: j, question: self.measurements[j].len() });
            }
            if self.measurements[j].iter().any(|ops| ops.len() != a) {
                return Err(Error::DimensionMismatch(format!(
                    "player {j}: every measurement needs {a} outcomes"
                )));
            }
        }
        Ok(())
    }

    /// Distribution of the answer sum on input tuple `x`.
    ///
    /// Branches with equal partial sums are merged before the next player
    /// measures: projectors for distinct outcomes of one player are
    /// orthogonal on that player's factor, so the merged vector's squared
    /// norm splits exactly into the branch probabilities.
    pub fn sum_distribution(&self, game: &ModMGame, x: &[usize]) -> Vec<f64> {
        let g = game.answers();
        let a = g.size() as usize;
        let dims = &self.state.local_dims;
        let mut branches: Vec<Option<Vec<Complex64>>> = vec![None; a];
        branches[0] = Some(self.state.amplitudes.clone());
        for (j, &q) in x.iter().enumerate() {
            let mut next: Vec<Option<Vec<Complex64>>> = vec![None; a];
            for (s, v) in branches.iter().enumerate() {
                let Some(v) = v else { continue };
                for (b, p) in self.measurements[j][q].iter().enumerate() {
                    let w = apply_local(dims, v, j, p);
                    let slot = &mut next[g.add(s as u32, b as u32) as usize];
                    match slot {
                        Some(acc) => acc.iter_mut().zip(&w).for_each(|(x, y)| *x += y),
                        None => *slot = Some(w),
                    }
                }
            }
            branches = next;
        }
        branches.iter().map(|v| v.as_ref().map_or(0.0, |v| norm_sqr(v))).collect()
    }
}

/// Exact (floating point) winning probability of a quantum strategy.
pub fn winning_probability(game: &ModMGame, s: &QuantumStrategy) -> Result<f64> {
    s.check_against(game)?;
    let mut value = 0.0;
    for e in game.support() {
        let dist = s.sum_distribution(game, &e.x);
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(Error::NonProjective(format!(
                "outcome distribution on input {:?} sums to {total}",
                e.x
            )));
        }
        value += crate::rational::to_f64(&e.weight) * dist[e.target as usize];
    }
    Ok(value)
}

/// Samples each player's outcome in turn, collapsing the state.
pub fn sample_answers<R: Rng + ?Sized>(s: &QuantumStrategy, x: &[usize], rng: &mut R) -> Vec<u32> {
    let dims = &s.state.local_dims;
    let mut v = s.state.amplitudes.clone();
    let mut out = Vec::with_capacity(x.len());
    for (j, &q) in x.iter().enumerate() {
        let ops = &s.measurements[j][q];
        let posts: Vec<Vec<Complex64>> = ops.iter().map(|p| apply_local(dims, &v, j, p)).collect();
        let probs: Vec<f64> = posts.iter().map(|w| norm_sqr(w)).collect();
        let total: f64 = probs.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = probs.len() - 1;
        for (b, &p) in probs.iter().enumerate() {
            if u < p {
                pick = b;
                break;
            }
            u -= p;
        }
        let scale = 1.0 / probs[pick].sqrt();
        v = posts[pick].iter().map(|z| z * scale).collect();
        out.push(pick as u32);
    }
    out
}

/// Monte Carlo estimate of the winning probability: `(mean, stderr)`.
pub fn sample_winning_probability(game: &ModMGame, s: &QuantumStrategy, seed: u64, samples: usize) -> Result<(f64, f64)> {
    s.check_against(game)?;
    let weights: Vec<f64> = game.support().iter().map(|e| crate::rational::to_f64(&e.weight)).collect();
    let g = game.answers();
    let mut rng = seeded(seed);
    let mut acc = Accumulator::default();
    for _ in 0..samples {
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
        let answers = sample_answers(s, &e.x, &mut rng);
        let sum = answers.iter().fold(0, |acc, &b| g.add(acc, b));
        acc.push(if sum == e.target { 1.0 } else { 0.0 });
    }
    Ok((acc.mean(), acc.stderr()))
}

/// Inverse Fourier transform on `C^m`: entry `(a, b)` is `w^(-ab) / sqrt(m)`.
pub fn inverse_fourier(m: usize) -> CMatrix {
    let norm = 1.0 / (m as f64).sqrt();
    CMatrix::from_fn(m, m, |a, b| {
        let turns = -(((a * b) % m) as f64) / m as f64;
        Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * turns)
    })
}

/// Measurement that applies `diag(e^{2 pi i k phi})`, then the inverse
/// Fourier transform, then measures in the computational basis.
pub fn phase_measurement(m: usize, phi_turns: f64) -> Vec<CMatrix> {
    let diag = CMatrix::from_diagonal(&DVector::from_fn(m, |k, _| {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * phi_turns)
    }));
    let w = inverse_fourier(m) * diag;
    let wd = w.adjoint();
    (0..m)
        .map(|a| {
            let col = wd.column(a);
            &col * col.adjoint()
        })
        .collect()
}

/// Perfect strategy for an angle game: every player shares an `m`-dimensional
/// GHZ state and measures in the Fourier basis rotated by their angle.
pub fn ghz_angle_strategy(g: &AngleGameDiscrete) -> Result<QuantumStrategy> {
    g.check_promise()?;
    let m = g.modulus() as usize;
    let state = PureState::ghz(g.players(), m)?;
    let measurements = g
        .angles()
        .iter()
        .map(|phis| phis.iter().map(|phi| phase_measurement(m, crate::rational::to_f64(phi))).collect())
        .collect();
    QuantumStrategy::new(state, measurements)
}

/// The CHSH game: binary questions, uniform, target `x AND y`.
pub fn chsh_game() -> ModMGame {
    let q = || vec!["0".to_string(), "1".to_string()];
    ModMGame::uniform(
        2,
        vec![q(), q()],
        vec![(vec![0, 0], 0), (vec![0, 1], 0), (vec![1, 0], 0), (vec![1, 1], 1)],
    )
    .expect("CHSH game is valid")
}

/// Projectors onto `cos(theta)|0> + sin(theta)|1>` and its complement.
pub fn real_qubit_measurement(theta: f64) -> Vec<CMatrix> {
    let v = nalgebra::DVector::from_vec(vec![Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)]);
    let p0 = &v * v.adjoint();
    let p1 = CMatrix::identity(2, 2) - &p0;
    vec![p0, p1]
}

/// Optimal CHSH strategy on a maximally entangled pair, winning with
/// probability `cos^2(pi/8)`.
pub fn chsh_optimal_strategy() -> QuantumStrategy {
    use std::f64::consts::PI;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let state = PureState::new(
        vec![2, 2],
        vec![Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(h, 0.0)],
    )
    .expect("valid state");
    let alice = vec![real_qubit_measurement(0.0), real_qubit_measurement(PI / 4.0)];
    let bob = vec![real_qubit_measurement(PI / 8.0), real_qubit_measurement(-PI / 8.0)];
    QuantumStrategy::new(state, vec![alice, bob]).expect("valid strategy")
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian
/// matrix, with column phases fixed.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    use crate::rng::standard_normal;
    let g = CMatrix::from_fn(d, d, |_, _| Complex64::new(standard_normal(rng), standard_normal(rng)));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for i in 0..d {
        let z = r[(i, i)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        for k in 0..d {
            q[(k, i)] *= phase;
        }
    }
    q
}

/// Random projective measurement with the given outcome ranks.
pub fn random_measurement<R: Rng + ?Sized>(ranks: &[usize], rng: &mut R) -> Vec<CMatrix> {
    let d: usize = ranks.iter().sum();
    let u = random_unitary(d, rng);
    let mut start = 0;
    ranks
        .iter()
        .map(|&r| {
            let cols = u.columns(start, r);
            start += r;
            &cols * cols.adjoint()
        })
        .collect()
}
