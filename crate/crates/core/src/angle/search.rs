use super::BoyerGame;
use crate::error::{Error, Result};
use crate::game::{classical_value_with, evaluate_strategy, search_size, DeterministicStrategy, SearchOptions};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoyerSearchReport {
    pub t: usize,
    pub m: u32,
    /// Exact classical value for each completed `D`.
    pub values: Vec<(u32, Rational)>,
    /// Values of `D` skipped because their search exceeds the budget.
    pub skipped: Vec<u32>,
}

impl BoyerSearchReport {
    /// Smallest value found and the `D` attaining it (first such `D`).
    pub fn min(&self) -> Option<&(u32, Rational)> {
        self.values.iter().fold(None, |best: Option<&(u32, Rational)>, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        })
    }

    pub fn is_partial(&self) -> bool {
        !self.skipped.is_empty()
    }

    pub fn completed(&self) -> Vec<u32> {
        self.values.iter().map(|(d, _)| *d).collect()
    }
}

/// Exact classical values of the Boyer games `(t, D, m)` for every `D` in
/// `ds`. The minimum over `D` upper-bounds the uniform angle game's value.
pub fn boyer_strategy_search(
    t: usize,
    m: u32,
    ds: impl IntoIterator<Item = u32>,
    budget: u128,
) -> Result<BoyerSearchReport> {
    let mut report = BoyerSearchReport { t, m, values: Vec::new(), skipped: Vec::new() };
    for d in ds {
        let game = BoyerGame::new(t, d, m)?.to_game();
        if search_size(&game) > budget {
            report.skipped.push(d);
            continue;
        }
        match classical_value_with(&game, &SearchOptions { budget }) {
            Ok(r) => report.values.push((d, r.omega)),
            Err(Error::BudgetExceeded { .. }) => report.skipped.push(d),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Strategy on the Boyer game `(4, 2^e, 2)`: the first three players answer
/// 0 and the fourth answers 1 exactly on inputs 0 and 1.
pub fn power_of_two_strategy(e: u32) -> Result<(BoyerGame, DeterministicStrategy)> {
    if e == 0 || e > 10 {
        return Err(Error::InvalidParameter(format!("exponent must be in 1..=10, got {e}")));
    }
    let b = BoyerGame::new(4, 1 << e, 2)?;
    let d = b.d as usize;
    let mut answers = vec![vec![0u32; d]; 4];
    answers[3][0] = 1;
    answers[3][1] = 1;
    Ok((b, DeterministicStrategy { answers }))
}

/// Exact value of [`power_of_two_strategy`], equal to `2/3 + 4^(-e)/3`.
pub fn power_of_two_strategy_value(e: u32) -> Result<Rational> {
    let (b, s) = power_of_two_strategy(e)?;
    evaluate_strategy(&b.to_game(), &s)
}
