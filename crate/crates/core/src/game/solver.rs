//! Exact classical value by enumeration of the first `t-1` players'
//! strategies and an exact best response for the last player.
//!
//! Adding constants `c_j` with `sum c_j = 0` to the players' answers does not
//! change any outcome, so players `0..t-1` answer 0 on their first question
//! without loss. The remaining answers are enumerated in lexicographic order
//! with an odometer; each step only revisits the support tuples that contain
//! the changed question.

use num_bigint::BigInt;
use rayon::prelude::*;

use super::{AnswerGroup, DeterministicStrategy, GameValueReport, ModMGame};
use crate::error::{Error, Result};
use crate::rational::{scale_to_u64, Rational};

pub const DEFAULT_BUDGET: u128 = 1 << 36;

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Maximum number of enumerated prefix strategies.
    pub budget: u128,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

pub fn classical_value(game: &ModMGame) -> Result<GameValueReport> {
    classical_value_with(game, &SearchOptions::default())
}

/// Number of prefix strategies the search would enumerate.
pub fn search_size(game: &ModMGame) -> u128 {
    let a = game.answers().size() as u128;
    let t = game.players();
    let free: usize = (0..t.saturating_sub(1)).map(|j| game.question_count(j) - 1).sum();
    (0..free).fold(1u128, |acc, _| acc.saturating_mul(a))
}

struct Prepared {
    group: AnswerGroup,
    a: usize,
    t: usize,
    /// (player, question) for each enumerated position, most significant first.
    digits: Vec<(usize, usize)>,
    /// Support tuples containing each digit's question.
    touching: Vec<Vec<usize>>,
    weights: Vec<u64>,
    targets: Vec<u32>,
    last_q: Vec<usize>,
    inputs: Vec<Vec<usize>>,
    last_count: usize,
    sub: Vec<u32>,
    add: Vec<u32>,
}

impl Prepared {
    fn new(game: &ModMGame) -> Result<Self> {
        let group = game.answers();
        let a = group.size() as usize;
        let t = game.players();
        let weights_r: Vec<Rational> = game.support().iter().map(|e| e.weight.clone()).collect();
        let (weights, _) = scale_to_u64(&weights_r)
            .ok_or_else(|| Error::InvalidGame("weights too fine for exact integer tallies".into()))?;
        let mut digits = Vec::new();
        for j in 0..t.saturating_sub(1) {
            for q in 1..game.question_count(j) {
                digits.push((j, q));
            }
        }
        let touching = digits
            .iter()
            .map(|&(j, q)| {
                game.support()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.x[j] == q)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut sub = vec![0u32; a * a];
        let mut add = vec![0u32; a * a];
        for x in 0..a as u32 {
            for y in 0..a as u32 {
                sub[x as usize * a + y as usize] = group.sub(x, y);
                add[x as usize * a + y as usize] = group.add(x, y);
            }
        }
        Ok(Self {
            group,
            a,
            t,
            digits,
            touching,
            weights,
            targets: game.support().iter().map(|e| e.target).collect(),
            last_q: game.support().iter().map(|e| e.x[t - 1]).collect(),
            inputs: game.support().iter().map(|e| e.x.clone()).collect(),
            last_count: game.question_count(t - 1),
            sub,
            add,
        })
    }

    fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }
}

struct ChunkBest {
    value: u64,
    prefix: Vec<u32>,
}

/// Enumerates all prefixes whose top `fixed.len()` digits equal `fixed`.
fn search_chunk(p: &Prepared, fixed: &[u32], questions: &[usize]) -> ChunkBest {
    let t = p.t;
    let a = p.a;
    let nd = p.digits.len();
    let mut digit_val = vec![0u32; nd];
    digit_val[..fixed.len()].copy_from_slice(fixed);

    // answers[j][q] for the enumerated players
    let mut answers: Vec<Vec<u32>> = (0..t.saturating_sub(1)).map(|j| vec![0; questions[j]]).collect();
    for (d, &(j, q)) in p.digits.iter().enumerate() {
        answers[j][q] = digit_val[d];
    }
    let n = p.inputs.len();
    let mut residual = vec![0u32; n];
    let mut tally = vec![0u64; p.last_count * a];
    for i in 0..n {
        let mut s = 0u32;
        for j in 0..t - 1 {
            s = p.add[s as usize * a + answers[j][p.inputs[i][j]] as usize];
        }
        let r = p.sub[p.targets[i] as usize * a + s as usize];
        residual[i] = r;
        tally[p.last_q[i] * a + r as usize] += p.weights[i];
    }
    let score = |tally: &[u64]| -> u64 {
        tally.chunks_exact(a).map(|c| *c.iter().max().unwrap()).sum()
    };
    let mut best = ChunkBest { value: score(&tally), prefix: digit_val.clone() };

    let free = fixed.len();
    if free == nd {
        return best;
    }
    loop {
        // odometer step over digits free..nd, last digit least significant
        let mut d = nd - 1;
        loop {
            let (j, q) = p.digits[d];
            let old = digit_val[d];
            let new = if old as usize + 1 == a { 0 } else { old + 1 };
            digit_val[d] = new;
            answers[j][q] = new;
            // shifting player j's answer by delta shifts the residual by -delta
            let delta = p.sub[new as usize * a + old as usize];
            for &i in &p.touching[d] {
                let lq = p.last_q[i] * a;
                let w = p.weights[i];
                tally[lq + residual[i] as usize] -= w;
                let r = p.sub[residual[i] as usize * a + delta as usize];
                residual[i] = r;
                tally[lq + r as usize] += w;
            }
            if new != 0 {
                break;
            }
            if d == free {
                return best;
            }
            d -= 1;
        }
        let v = score(&tally);
        if v > best.value {
            best.value = v;
            best.prefix.copy_from_slice(&digit_val);
        }
    }
}

/// Exact classical value with a lexicographically smallest canonical witness.
///
/// The witness is the first optimal prefix (players `0..t-1`, first answers
/// fixed to 0) in lexicographic order, completed by the last player's best
/// response with ties resolved toward the smallest answer. The result does
/// not depend on the number of worker threads.
pub fn classical_value_with(game: &ModMGame, opts: &SearchOptions) -> Result<GameValueReport> {
    let size = search_size(game);
    if size > opts.budget {
        return Err(Error::BudgetExceeded { needed: size, budget: opts.budget });
    }
    let p = Prepared::new(game)?;
    let t = p.t;
    let a = p.a;
    let questions: Vec<usize> = (0..t).map(|j| game.question_count(j)).collect();

    // split the top digits into independent chunks
    let nd = p.digits.len();
    let mut split = 0;
    let mut chunks: u128 = 1;
    while split < nd && chunks < 256 && size / chunks > 4096 {
        split += 1;
        chunks *= a as u128;
    }
    let prefixes: Vec<Vec<u32>> = (0..chunks as u64)
        .map(|mut c| {
            let mut v = vec![0u32; split];
            for d in (0..split).rev() {
                v[d] = (c % a as u64) as u32;
                c /= a as u64;
            }
            v
        })
        .collect();
    let results: Vec<ChunkBest> = prefixes
        .par_iter()
        .map(|fixed| search_chunk(&p, fixed, &questions))
        .collect();
    let best = results
        .into_iter()
        .reduce(|acc, r| if r.value > acc.value { r } else { acc })
        .expect("at least one chunk");

    let witness = complete_witness(&p, &best.prefix, &questions);
    let omega = Rational::new(BigInt::from(best.value), BigInt::from(p.total_weight()));
    let beta = game.bias_of(&omega);
    Ok(GameValueReport { omega, beta, witness })
}

fn complete_witness(p: &Prepared, prefix: &[u32], questions: &[usize]) -> DeterministicStrategy {
    let t = p.t;
    let a = p.a;
    let mut answers: Vec<Vec<u32>> = questions.iter().map(|&n| vec![0; n]).collect();
    for (d, &(j, q)) in p.digits.iter().enumerate() {
        answers[j][q] = prefix[d];
    }
    let mut tally = vec![0u64; p.last_count * a];
    for (i, x) in p.inputs.iter().enumerate() {
        let s = (0..t - 1).fold(0, |acc, j| p.group.add(acc, answers[j][x[j]]));
        let r = p.group.sub(p.targets[i], s);
        tally[p.last_q[i] * a + r as usize] += p.weights[i];
    }
    for q in 0..p.last_count {
        let row = &tally[q * a..(q + 1) * a];
        let mut best = 0;
        for r in 1..a {
            if row[r] > row[best] {
                best = r;
            }
        }
        answers[t - 1][q] = best as u32;
    }
    DeterministicStrategy { answers }
}
