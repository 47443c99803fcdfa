//! Unique games, their vector relaxation and Gaussian-projection rounding.

mod rounding;
mod solver;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::quantum::{apply_local, QuantumStrategy};
use crate::rational::{rational_from_json, rat, Rational};
use crate::rng::seeded;

pub use rounding::{
    diagnostics, perturb_planted, perturbation_study, round, study_csv, PairDiagnostics, Rounding,
    RoundingDiagnostics, StudyReport, StudyRow,
};
pub use solver::{solve_sdp, solve_sdp_from, xor2_entangled_bias, SdpOptions, SdpResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniquePair {
    pub x: usize,
    pub y: usize,
    pub weight: Rational,
    /// Answer `i` of the first player is matched by `perm[i]`.
    pub perm: Vec<usize>,
}

/// Two-player game won exactly when `b = perm_xy(a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueGame {
    k: usize,
    xs: Vec<String>,
    ys: Vec<String>,
    pairs: Vec<UniquePair>,
}

impl UniqueGame {
    pub fn new(k: usize, xs: Vec<String>, ys: Vec<String>, pairs: Vec<UniquePair>) -> Result<Self> {
        if k == 0 || xs.is_empty() || ys.is_empty() || pairs.is_empty() {
            return Err(Error::InvalidGame("unique games need answers, questions and pairs".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut total = Rational::zero();
        for p in &pairs {
            if p.x >= xs.len() || p.y >= ys.len() {
                return Err(Error::InvalidGame(format!("pair ({}, {}) out of range", p.x, p.y)));
            }
            if !seen.insert((p.x, p.y)) {
                return Err(Error::InvalidGame(format!("pair ({}, {}) listed twice", xs[p.x], ys[p.y])));
            }
            if p.weight <= Rational::zero() {
                return Err(Error::InvalidGame("pair weights must be positive".into()));
            }
            let mut sorted = p.perm.clone();
            sorted.sort_unstable();
            if sorted != (0..k).collect::<Vec<_>>() {
                return Err(Error::InvalidGame(format!("{:?} is not a permutation of 0..{k}", p.perm)));
            }
            total += &p.weight;
        }
        if !total.is_one() {
            return Err(Error::InvalidGame(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { k, xs, ys, pairs })
    }

    fn numbered(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    /// Uniform weights over all question pairs, with `perm(x, y)` supplied.
    pub fn uniform(k: usize, nx: usize, ny: usize, mut perm: impl FnMut(usize, usize) -> Vec<usize>) -> Result<Self> {
        let w = rat(1, (nx * ny) as i64);
        let pairs = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| UniquePair { x, y, weight: w.clone(), perm: perm(x, y) })
            .collect();
        Self::new(k, Self::numbered(nx), Self::numbered(ny), pairs)
    }

    pub fn identity(k: usize, nx: usize, ny: usize) -> Result<Self> {
        Self::uniform(k, nx, ny, |_, _| (0..k).collect())
    }

    /// CHSH as a unique game: answers must differ exactly on `(1, 1)`.
    pub fn chsh() -> Self {
        Self::uniform(2, 2, 2, |x, y| if x == 1 && y == 1 { vec![1, 0] } else { vec![0, 1] }).expect("valid game")
    }

    /// Independent uniformly random permutations on every pair.
    pub fn random(k: usize, nx: usize, ny: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        Self::uniform(k, nx, ny, |_, _| {
            let mut p: Vec<usize> = (0..k).collect();
            p.shuffle(&mut rng);
            p
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn xs(&self) -> &[String] {
        &self.xs
    }

    pub fn ys(&self) -> &[String] {
        &self.ys
    }

    pub fn pairs(&self) -> &[UniquePair] {
        &self.pairs
    }

    /// Winning probability of deterministic answers `a(x)`, `b(y)`.
    pub fn value(&self, a: &[usize], b: &[usize]) -> Rational {
        self.pairs.iter().filter(|p| p.perm[a[p.x]] == b[p.y]).map(|p| p.weight.clone()).sum()
    }

    /// Exact classical value: all first-player maps, best response for the second.
    pub fn classical_value(&self, budget: u128) -> Result<(Rational, Vec<usize>, Vec<usize>)> {
        let nx = self.xs.len() as u32;
        let needed = (self.k as u128).checked_pow(nx).unwrap_or(u128::MAX);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut a = vec![0usize; self.xs.len()];
        let mut best: Option<(Rational, Vec<usize>, Vec<usize>)> = None;
        loop {
            let mut score = vec![vec![Rational::zero(); self.k]; self.ys.len()];
            for p in &self.pairs {
                score[p.y][p.perm[a[p.x]]] += &p.weight;
            }
            let b: Vec<usize> = score
                .iter()
                .map(|s| (0..self.k).fold(0, |best, j| if s[j] > s[best] { j } else { best }))
                .collect();
            let v = self.value(&a, &b);
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, a.clone(), b));
            }
            let mut i = a.len();
            loop {
                if i == 0 {
                    return Ok(best.expect("at least one strategy"));
                }
                i -= 1;
                a[i] += 1;
                if a[i] < self.k {
                    break;
                }
                a[i] = 0;
            }
        }
    }
}

/// A game with a planted perfect solution: `perm_xy = tau_y^{-1} o tau_x`,
/// so `a(x) = tau_x^{-1}(0)`, `b(y) = tau_y^{-1}(0)` wins every pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedInstance {
    pub game: UniqueGame,
    pub tau_x: Vec<Vec<usize>>,
    pub tau_y: Vec<Vec<usize>>,
}

impl PlantedInstance {
    pub fn new(k: usize, nx: usize, ny: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        let mut draw = |n: usize| -> Vec<Vec<usize>> {
            (0..n)
                .map(|_| {
                    let mut p: Vec<usize> = (0..k).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect()
        };
        let tau_x = draw(nx);
        let tau_y = draw(ny);
        let inv_y: Vec<Vec<usize>> = tau_y.iter().map(|t| invert(t)).collect();
        let game = UniqueGame::uniform(k, nx, ny, |x, y| (0..k).map(|i| inv_y[y][tau_x[x][i]]).collect())?;
        Ok(Self { game, tau_x, tau_y })
    }

    pub fn labeling(&self) -> (Vec<usize>, Vec<usize>) {
        let a = self.tau_x.iter().map(|t| invert(t)[0]).collect();
        let b = self.tau_y.iter().map(|t| invert(t)[0]).collect();
        (a, b)
    }

    /// `u^x_i = f_{tau_x(i)} / sqrt(k)` and likewise for `v`: every vector
    /// nonzero, objective exactly 1.
    pub fn spread_solution(&self) -> VectorSolution {
        let k = self.game.k;
        let s = 1.0 / (k as f64).sqrt();
        let block = |tau: &Vec<usize>| -> Vec<Vec<f64>> {
            (0..k)
                .map(|i| {
                    let mut e = vec![0.0; k];
                    e[tau[i]] = s;
                    e
                })
                .collect()
        };
        let u = self.tau_x.iter().map(block).collect();
        let v = self.tau_y.iter().map(block).collect();
        VectorSolution::new(&self.game, u, v).expect("consistent shapes")
    }
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Vectors `u^x_i`, `v^y_j` in `R^d` and the objective
/// `sum_xy w_xy sum_i <u^x_i, v^y_{perm(i)}>`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSolution {
    pub k: usize,
    pub d: usize,
    pub u: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<Vec<f64>>>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Largest `|<u_i, u_j>|` within a block, `i != j`.
    pub orthogonality: f64,
    /// Largest `|sum_i |u_i|^2 - 1|`.
    pub normalization: f64,
    /// Largest `-<u^x_i, v^y_j>` (zero when all cross products are nonnegative).
    pub negativity: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl VectorSolution {
    pub fn new(game: &UniqueGame, u: Vec<Vec<Vec<f64>>>, v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let k = game.k;
        let d = u.first().and_then(|b| b.first()).map_or(0, Vec::len);
        let ok = |blocks: &Vec<Vec<Vec<f64>>>, n: usize| {
            blocks.len() == n && blocks.iter().all(|b| b.len() == k && b.iter().all(|w| w.len() == d))
        };
        if d == 0 || !ok(&u, game.xs.len()) || !ok(&v, game.ys.len()) {
            return Err(Error::DimensionMismatch("vector blocks do not match the game".into()));
        }
        let mut s = Self { k, d, u, v, objective: 0.0 };
        s.objective = s.objective_for(game);
        Ok(s)
    }

    /// Indicator vectors in `R^1` for deterministic answers.
    pub fn from_deterministic(game: &UniqueGame, a: &[usize], b: &[usize]) -> Result<Self> {
        let block = |ans: usize| (0..game.k).map(|i| vec![if i == ans { 1.0 } else { 0.0 }]).collect();
        Self::new(game, a.iter().map(|&i| block(i)).collect(), b.iter().map(|&j| block(j)).collect())
    }

    pub fn objective_for(&self, game: &UniqueGame) -> f64 {
        game.pairs
            .iter()
            .map(|p| {
                let w = crate::rational::to_f64(&p.weight);
                w * (0..self.k).map(|i| dot(&self.u[p.x][i], &self.v[p.y][p.perm[i]])).sum::<f64>()
            })
            .sum()
    }

    pub fn residuals(&self) -> Residuals {
        let mut r = Residuals { orthogonality: 0.0, normalization: 0.0, negativity: 0.0 };
        for block in self.u.iter().chain(&self.v) {
            let mut total = 0.0;
            for i in 0..self.k {
                total += dot(&block[i], &block[i]);
                for j in 0..i {
                    r.orthogonality = r.orthogonality.max(dot(&block[i], &block[j]).abs());
                }
            }
            r.normalization = r.normalization.max((total - 1.0).abs());
        }
        for bu in &self.u {
            for bv in &self.v {
                for a in bu {
                    for b in bv {
                        r.negativity = r.negativity.max(-dot(a, b));
                    }
                }
            }
        }
        r
    }

    pub fn is_feasible(&self, tol: f64, nonnegative: bool) -> bool {
        let r = self.residuals();
        r.orthogonality <= tol && r.normalization <= tol && (!nonnegative || r.negativity <= tol)
    }
}

/// `u^x_i = (P^x_i (x) I) psi`, `v^y_j = (I (x) Q^y_j) psi`, with complex
/// entries split into interleaved real and imaginary parts.
pub fn quantum_strategy_to_vectors(game: &UniqueGame, s: &QuantumStrategy) -> Result<VectorSolution> {
    let dims = s.state.local_dims().to_vec();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch("two-player strategies only".into()));
    }
    let (k, nx, ny) = (game.k, game.xs.len(), game.ys.len());
    let m = &s.measurements;
    if m[0].len() != nx || m[1].len() != ny || m.iter().flatten().any(|q| q.len() != k) {
        return Err(Error::DimensionMismatch(format!("strategy does not have {k} outcomes on {nx} x {ny} questions")));
    }
    let psi = s.state.amplitudes();
    let realify = |c: Vec<Complex64>| c.into_iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>();
    let blocks = |player: usize| -> Vec<Vec<Vec<f64>>> {
        m[player].iter().map(|ops| ops.iter().map(|op| realify(apply_local(&dims, psi, player, op))).collect()).collect()
    };
    VectorSolution::new(game, blocks(0), blocks(1))
}

pub fn unique_game_from_json(v: &Value) -> Result<UniqueGame> {
    let k = v.get("k").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing integer \"k\"".into()))? as usize;
    let arr = v.get("pairs").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing \"pairs\" array".into()))?;
    let label = |x: &Value| -> Result<String> {
        match x {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::Parse(format!("question label must be a string or number, got {other}"))),
        }
    };
    let (mut xs, mut ys) = (Vec::<String>::new(), Vec::<String>::new());
    let intern = |list: &mut Vec<String>, l: String| -> usize {
        list.iter().position(|s| *s == l).unwrap_or_else(|| {
            list.push(l);
            list.len() - 1
        })
    };
    let mut pairs = Vec::new();
    for p in arr {
        let x = intern(&mut xs, label(p.get("x").ok_or_else(|| Error::Parse("pair without \"x\"".into()))?)?);
        let y = intern(&mut ys, label(p.get("y").ok_or_else(|| Error::Parse("pair without \"y\"".into()))?)?);
        let weight = rational_from_json(p.get("w").ok_or_else(|| Error::Parse("pair without \"w\"".into()))?)?;
        let perm = p
            .get("perm")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("pair without \"perm\" array".into()))?
            .iter()
            .map(|j| j.as_u64().map(|j| j as usize).ok_or_else(|| Error::Parse("perm entries must be integers".into())))
            .collect::<Result<Vec<_>>>()?;
        pairs.push(UniquePair { x, y, weight, perm });
    }
    UniqueGame::new(k, xs, ys, pairs)
}

pub fn unique_game_to_json(g: &UniqueGame) -> Value {
    json!({
        "k": g.k,
        "pairs": g.pairs.iter().map(|p| json!({
            "x": g.xs[p.x], "y": g.ys[p.y], "w": p.weight.to_string(), "perm": p.perm,
        })).collect::<Vec<_>>(),
    })
}

pub fn solution_from_json(game: &UniqueGame, v: &Value) -> Result<VectorSolution> {
    let blocks = |key: &str| -> Result<Vec<Vec<Vec<f64>>>> {
        serde_json::from_value(v.get(key).cloned().ok_or_else(|| Error::Parse(format!("missing \"{key}\"")))?)
            .map_err(Error::from)
    };
    VectorSolution::new(game, blocks("u")?, blocks("v")?)
}

pub fn solution_to_json(s: &VectorSolution) -> Value {
    json!({ "k": s.k, "d": s.d, "objective": s.objective, "u": s.u, "v": s.v })
}
