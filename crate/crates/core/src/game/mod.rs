//! MOD-m games and exact classical values.
//!
//! A [`ModMGame`] has `t` players; player `j` receives a question from its
//! label list and answers with an element of `Z_m`. The players win when the
//! sum of their answers is congruent to the target of the asked tuple. The
//! answer alphabet can be widened to `Z_m^k` (answers and targets are then
//! mixed-radix encoded, coordinate 0 least significant), which is how the
//! AND form of parallel repetition is represented.

mod connection;
mod json;
mod repetition;
mod solver;

use std::collections::HashSet;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rational;

pub use connection::{connection_graph, graph_of_tuples, is_connected, is_total, ConnectionGraph};
pub use json::{game_from_json, game_from_value, game_to_json, report_csv_row, report_to_json};
pub use repetition::{cleve_slofstra_check, xor_parallel_repetition, RepetitionMode};
pub use solver::{classical_value, classical_value_with, search_size, SearchOptions, DEFAULT_BUDGET};

/// Answer alphabet `Z_m^k`, elements encoded base `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerGroup {
    pub m: u32,
    pub width: u32,
}

impl AnswerGroup {
    pub fn size(&self) -> u32 {
        self.m.pow(self.width)
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.width == 1 {
            return (a + b) % self.m;
        }
        let (mut a, mut b, mut out, mut place) = (a, b, 0, 1);
        for _ in 0..self.width {
            out += ((a % self.m + b % self.m) % self.m) * place;
            a /= self.m;
            b /= self.m;
            place *= self.m;
        }
        out
    }

    pub fn neg(&self, a: u32) -> u32 {
        if self.width == 1 {
            return (self.m - a % self.m) % self.m;
        }
        let (mut a, mut out, mut place) = (a, 0, 1);
        for _ in 0..self.width {
            out += ((self.m - a % self.m) % self.m) * place;
            a /= self.m;
            place *= self.m;
        }
        out
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    /// Coordinate `i` of an encoded element.
    pub fn digit(&self, a: u32, i: u32) -> u32 {
        (a / self.m.pow(i)) % self.m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportEntry {
    /// Question index per player.
    pub x: Vec<usize>,
    #[serde(with = "crate::rational::serde_str")]
    pub weight: Rational,
    pub target: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModMGame {
    m: u32,
    width: u32,
    questions: Vec<Vec<String>>,
    support: Vec<SupportEntry>,
}

impl ModMGame {
    /// Builds and validates a MOD-m game. Weights must be positive and sum to
    /// one; tuples must be distinct and in range.
    pub fn new(m: u32, questions: Vec<Vec<String>>, support: Vec<SupportEntry>) -> Result<Self> {
        Self::with_width(m, 1, questions, support)
    }

    pub fn with_width(
        m: u32,
        width: u32,
        questions: Vec<Vec<String>>,
        support: Vec<SupportEntry>,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGame(format!("modulus must be >= 2, got {m}")));
        }
        if width == 0 || (m as u64).pow(width) > u32::MAX as u64 / 2 {
            return Err(Error::InvalidGame(format!("unsupported answer width {width}")));
        }
        let t = questions.len();
        if t == 0 {
            return Err(Error::InvalidGame("at least one player required".into()));
        }
        for (j, qs) in questions.iter().enumerate() {
            if qs.is_empty() {
                return Err(Error::InvalidGame(format!("player {j} has no questions")));
            }
            let distinct: HashSet<&String> = qs.iter().collect();
            if distinct.len() != qs.len() {
                return Err(Error::InvalidGame(format!("player {j} has duplicate labels")));
            }
        }
        if support.is_empty() {
            return Err(Error::InvalidGame("empty support".into()));
        }
        let group = AnswerGroup { m, width };
        let mut seen = HashSet::new();
        let mut total = Rational::zero();
        for e in &support {
            if e.x.len() != t {
                return Err(Error::InvalidGame(format!(
                    "input tuple {:?} has {} entries, expected {t}",
                    e.x,
                    e.x.len()
                )));
            }
            for (j, &q) in e.x.iter().enumerate() {
                if q >= questions[j].len() {
                    return Err(Error::InvalidGame(format!(
                        "question index {q} out of range for player {j}"
                    )));
                }
            }
            if e.weight <= Rational::zero() {
                return Err(Error::InvalidGame(format!(
                    "input {:?} has non-positive weight {}",
                    e.x, e.weight
                )));
            }
            if e.target >= group.size() {
                return Err(Error::InvalidGame(format!(
                    "target {} outside [0, {})",
                    e.target,
                    group.size()
                )));
            }
            if !seen.insert(e.x.clone()) {
                return Err(Error::InvalidGame(format!("input {:?} listed twice", e.x)));
            }
            total += &e.weight;
        }
        if !total.is_one() {
            return Err(Error::InvalidGame(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { m, width, questions, support })
    }

    /// Uniform distribution over the given `(tuple, target)` pairs.
    pub fn uniform(m: u32, questions: Vec<Vec<String>>, inputs: Vec<(Vec<usize>, u32)>) -> Result<Self> {
        let n = inputs.len().max(1) as i64;
        let w = crate::rational::rat(1, n);
        let support = inputs
            .into_iter()
            .map(|(x, target)| SupportEntry { x, weight: w.clone(), target })
            .collect();
        Self::new(m, questions, support)
    }

    pub fn players(&self) -> usize {
        self.questions.len()
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn answers(&self) -> AnswerGroup {
        AnswerGroup { m: self.m, width: self.width }
    }

    pub fn questions(&self) -> &[Vec<String>] {
        &self.questions
    }

    pub fn question_count(&self, player: usize) -> usize {
        self.questions[player].len()
    }

    pub fn support(&self) -> &[SupportEntry] {
        &self.support
    }

    pub fn is_xor(&self) -> bool {
        self.m == 2 && self.width == 1
    }

    /// Rescaled advantage over uniformly random answers.
    pub fn bias_of(&self, omega: &Rational) -> Rational {
        let a = Rational::from_integer(self.answers().size().into());
        (omega - Rational::one() / &a) * &a / (&a - Rational::one())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    /// `answers[j][q]` is player `j`'s answer to question index `q`.
    pub answers: Vec<Vec<u32>>,
}

impl DeterministicStrategy {
    pub fn constant(game: &ModMGame, value: u32) -> Self {
        Self {
            answers: game.questions().iter().map(|qs| vec![value; qs.len()]).collect(),
        }
    }

    /// Concatenated answers, player-major; the order used for tie-breaking.
    pub fn encoding(&self) -> Vec<u32> {
        self.answers.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameValueReport {
    #[serde(with = "crate::rational::serde_str")]
    pub omega: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub beta: Rational,
    pub witness: DeterministicStrategy,
}

fn check_strategy(game: &ModMGame, s: &DeterministicStrategy) -> Result<()> {
    if s.answers.len() != game.players() {
        return Err(Error::IncompleteStrategy { player: s.answers.len().min(game.players()), question: 0 });
    }
    let size = game.answers().size();
    for (j, qs) in game.questions().iter().enumerate() {
        if s.answers[j].len() < qs.len() {
            return Err(Error::IncompleteStrategy { player: j, question: s.answers[j].len() });
        }
        if let Some(q) = s.answers[j].iter().position(|&a| a >= size) {
            return Err(Error::InvalidParameter(format!(
                "player {j} answers {} to question {q}, outside [0, {size})",
                s.answers[j][q]
            )));
        }
    }
    Ok(())
}

/// Exact winning probability of a deterministic strategy.
pub fn evaluate_strategy(game: &ModMGame, s: &DeterministicStrategy) -> Result<Rational> {
    check_strategy(game, s)?;
    let g = game.answers();
    let mut value = Rational::zero();
    for e in game.support() {
        let sum = e
            .x
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| g.add(acc, s.answers[j][q]));
        if sum == e.target {
            value += &e.weight;
        }
    }
    Ok(value)
}

/// Game in which every answer tuple wins (target always 0 and answers 0),
/// on the full product of the given question counts.
pub fn constant_target_game(m: u32, counts: &[usize]) -> Result<ModMGame> {
    let questions: Vec<Vec<String>> = counts
        .iter()
        .map(|&n| (0..n).map(|q| q.to_string()).collect())
        .collect();
    let inputs = product_indices(counts).into_iter().map(|x| (x, 0)).collect();
    ModMGame::uniform(m, questions, inputs)
}

/// The 3-player Mermin game: support {000, 110, 101, 011}, uniform, target
/// 0 on 000 and 1 elsewhere.
pub fn mermin_game() -> ModMGame {
    let q = || vec!["0".to_string(), "1".to_string()];
    ModMGame::uniform(
        2,
        vec![q(), q(), q()],
        vec![
            (vec![0, 0, 0], 0),
            (vec![1, 1, 0], 1),
            (vec![1, 0, 1], 1),
            (vec![0, 1, 1], 1),
        ],
    )
    .expect("mermin game is valid")
}

/// All tuples of `[0, counts[0]) x ... x [0, counts[t-1])` in lexicographic order.
pub fn product_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in counts {
        let mut next = Vec::with_capacity(out.len() * n);
        for prefix in &out {
            for q in 0..n {
                let mut p = prefix.clone();
                p.push(q);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
