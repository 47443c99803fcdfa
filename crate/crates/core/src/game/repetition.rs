//! k-fold parallel repetition of XOR games.
//!
//! Repeated questions are k-tuples of base questions, indexed in
//! lexicographic order (copy 0 most significant). In AND mode answers live in
//! `Z_2^k` with copy `i` stored in bit `i`.

use num_traits::{One, Zero};

use super::{product_indices, DeterministicStrategy, ModMGame, SupportEntry};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepetitionMode {
    /// Players win when the parity of their answers matches the parity of
    /// the targets.
    Xor,
    /// Players win when every copy is won.
    And,
}

pub fn xor_parallel_repetition(game: &ModMGame, k: usize, mode: RepetitionMode) -> Result<ModMGame> {
    if !game.is_xor() {
        return Err(Error::Unsupported("parallel repetition requires an XOR game (m = 2)".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("repetition count must be at least 1".into()));
    }
    if k > 16 {
        return Err(Error::InvalidParameter(format!("repetition count {k} too large")));
    }
    let t = game.players();
    let questions: Vec<Vec<String>> = (0..t)
        .map(|j| {
            let labels = &game.questions()[j];
            product_indices(&vec![labels.len(); k])
                .into_iter()
                .map(|qs| qs.iter().map(|&q| labels[q].as_str()).collect::<Vec<_>>().join(","))
                .collect()
        })
        .collect();
    let base = game.support();
    let mut support = Vec::new();
    for combo in product_indices(&vec![base.len(); k]) {
        let mut x = vec![0usize; t];
        let mut weight = Rational::one();
        let mut target = 0u32;
        for (i, &s) in combo.iter().enumerate() {
            let e = &base[s];
            for j in 0..t {
                x[j] = x[j] * game.question_count(j) + e.x[j];
            }
            weight *= &e.weight;
            target = match mode {
                RepetitionMode::Xor => target ^ e.target,
                RepetitionMode::And => target | (e.target << i),
            };
        }
        support.push(SupportEntry { x, weight, target });
    }
    match mode {
        RepetitionMode::Xor => ModMGame::new(2, questions, support),
        RepetitionMode::And => ModMGame::with_width(2, k as u32, questions, support),
    }
}

/// Both sides of the decomposition of the AND-repetition winning probability
/// into XOR-repetition correlations:
/// `Pr[all k copies won] = 2^-k * sum over M of E[(-1)^(sum over i in M of err_i)]`,
/// where `err_i` is the error bit of copy `i` and the empty set contributes 1.
///
/// `strategy` is a strategy for the AND repetition of `game`.
pub fn cleve_slofstra_check(
    game: &ModMGame,
    strategy: &DeterministicStrategy,
    k: usize,
) -> Result<(Rational, Rational)> {
    let rep = xor_parallel_repetition(game, k, RepetitionMode::And)?;
    let lhs = super::evaluate_strategy(&rep, strategy)?;
    let mut correlations = vec![Rational::zero(); 1 << k];
    for e in rep.support() {
        let answer = e
            .x
            .iter()
            .enumerate()
            .fold(0u32, |acc, (j, &q)| acc ^ strategy.answers[j][q]);
        let err = answer ^ e.target;
        for (mask, c) in correlations.iter_mut().enumerate() {
            if (err & mask as u32).count_ones() % 2 == 0 {
                *c += &e.weight;
            } else {
                *c -= &e.weight;
            }
        }
    }
    let total: Rational = correlations.into_iter().sum();
    let rhs = total / Rational::from_integer((1u64 << k).into());
    Ok((lhs, rhs))
}
