//! Angle games, Boyer games and the uniform angle game.
//!
//! Angles are exact rationals in turns (fractions of a full circle). In an
//! angle game with modulus `m` every asked tuple satisfies
//! `phi_1 + ... + phi_t = target / m (mod 1)`.

mod poly;
mod schmidt;
mod search;
mod uag;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::game::{product_indices, ModMGame, SupportEntry};
use crate::rational::{frac, int, rat, Rational};

pub use poly::{count_roots, isolate_roots, simplest_between, sturm_sequence, Poly, Root};
pub use schmidt::{schmidt_reduce, synthesize_perfect_strategy, SnapOptions};
pub use search::{boyer_strategy_search, power_of_two_strategy, power_of_two_strategy_value, BoyerSearchReport};
pub use uag::{
    conditional_polynomials, floor_strategy_trial, floor_strategy_value, irwin_hall_pdf, profile_csv,
    reduce_to_uag, sample_uag, semi_trivial_value, uag_conditional_profile, AngleOracle, ArgmaxPiece,
    PiecewisePolynomial, ProfileRow, SemiTrivialOracle, SemiTrivialValue,
};
pub use crate::quantum::SchmidtStrategySpec;

/// Discrete angle game: a MOD-m game whose questions carry angles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleGameDiscrete {
    game: ModMGame,
    /// `angles[j][q]` in turns, in `[0, 1)`.
    angles: Vec<Vec<Rational>>,
}

impl AngleGameDiscrete {
    pub fn new(game: ModMGame, angles: Vec<Vec<Rational>>) -> Result<Self> {
        if game.width() != 1 {
            return Err(Error::Unsupported("angle games have a single answer coordinate".into()));
        }
        if angles.len() != game.players()
            || (0..game.players()).any(|j| angles[j].len() != game.question_count(j))
        {
            return Err(Error::DimensionMismatch("one angle per question is required".into()));
        }
        if angles.iter().flatten().any(|a| a < &int(0) || a >= &int(1)) {
            return Err(Error::InvalidParameter("angles must lie in [0, 1) turns".into()));
        }
        let g = Self { game, angles };
        g.check_promise()?;
        Ok(g)
    }

    /// Builds the game from weighted angle tuples; each player's questions
    /// are its distinct angles in increasing order and targets follow from
    /// the promise.
    pub fn from_tuples(m: u32, tuples: Vec<(Vec<Rational>, Rational)>) -> Result<Self> {
        let t = tuples.first().map_or(0, |(a, _)| a.len());
        let mut angles: Vec<Vec<Rational>> = vec![Vec::new(); t];
        for (a, _) in &tuples {
            if a.len() != t {
                return Err(Error::InvalidGame("angle tuples of different lengths".into()));
            }
            for (j, phi) in a.iter().enumerate() {
                angles[j].push(frac(phi));
            }
        }
        for v in &mut angles {
            v.sort();
            v.dedup();
        }
        let mr = int(m as i64);
        let mut support = Vec::with_capacity(tuples.len());
        for (a, weight) in tuples {
            let sum: Rational = a.iter().map(frac).sum();
            let l = frac(&sum) * &mr;
            if !l.is_integer() {
                return Err(Error::PromiseViolated(format!(
                    "angles sum to {sum}, not a multiple of 1/{m}"
                )));
            }
            let x = a
                .iter()
                .enumerate()
                .map(|(j, phi)| angles[j].binary_search(&frac(phi)).expect("angle listed"))
                .collect();
            let target = l.to_integer().try_into().expect("target below m");
            support.push(SupportEntry { x, weight, target });
        }
        let labels = angles.iter().map(|v| v.iter().map(|a| a.to_string()).collect()).collect();
        Self::new(ModMGame::new(m, labels, support)?, angles)
    }

    /// Verifies `sum phi_j = target / m (mod 1)` on every asked tuple.
    pub fn check_promise(&self) -> Result<()> {
        let m = self.game.modulus() as i64;
        for e in self.game.support() {
            let sum: Rational = e.x.iter().enumerate().map(|(j, &q)| self.angles[j][q].clone()).sum();
            if !frac(&(sum.clone() - rat(e.target as i64, m))).is_zero() {
                return Err(Error::PromiseViolated(format!(
                    "input {:?}: angles sum to {sum}, target {} / {m}",
                    e.x, e.target
                )));
            }
        }
        Ok(())
    }

    pub fn players(&self) -> usize {
        self.game.players()
    }

    pub fn modulus(&self) -> u32 {
        self.game.modulus()
    }

    pub fn angles(&self) -> &[Vec<Rational>] {
        &self.angles
    }

    pub fn game(&self) -> &ModMGame {
        &self.game
    }

    pub fn to_game(&self) -> ModMGame {
        self.game.clone()
    }
}

/// Boyer game with `d` inputs per player and modulus `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoyerGame {
    pub t: usize,
    pub d: u32,
    pub m: u32,
}

impl BoyerGame {
    pub fn new(t: usize, d: u32, m: u32) -> Result<Self> {
        if t < 2 {
            return Err(Error::InvalidParameter(format!("Boyer games need t >= 2, got {t}")));
        }
        if d < 1 || m < 2 {
            return Err(Error::InvalidParameter(format!("need D >= 1 and M >= 2, got D={d}, M={m}")));
        }
        Ok(Self { t, d, m })
    }

    /// Inputs `x` in `[0, D)^t` with `sum x = 0 (mod D)`, uniform, target
    /// `(sum x / D) mod M`.
    pub fn inputs(&self) -> Vec<(Vec<usize>, u32)> {
        let d = self.d as usize;
        product_indices(&vec![d; self.t])
            .into_iter()
            .filter_map(|x| {
                let s: usize = x.iter().sum();
                (s % d == 0).then(|| (x, ((s / d) % self.m as usize) as u32))
            })
            .collect()
    }

    pub fn to_game(&self) -> ModMGame {
        let labels = vec![(0..self.d).map(|x| x.to_string()).collect(); self.t];
        ModMGame::uniform(self.m, labels, self.inputs()).expect("Boyer games are valid")
    }

    /// Angle form with `phi_j = x_j / (M D)` turns.
    pub fn to_angle(&self) -> AngleGameDiscrete {
        let den = (self.m * self.d) as i64;
        let angles = vec![(0..self.d).map(|x| rat(x as i64, den)).collect(); self.t];
        AngleGameDiscrete::new(self.to_game(), angles).expect("Boyer angles satisfy the promise")
    }
}

pub fn boyer_to_game(b: &BoyerGame) -> ModMGame {
    b.to_game()
}

pub fn boyer_to_angle(b: &BoyerGame) -> AngleGameDiscrete {
    b.to_angle()
}
