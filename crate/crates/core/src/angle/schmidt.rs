use std::collections::VecDeque;

use num_complex::Complex64;
use num_traits::One;

use super::AngleGameDiscrete;
use crate::error::{Error, Result};
use crate::game::{connection_graph, evaluate_strategy, DeterministicStrategy, ModMGame};
use crate::quantum::{verify_schmidt_perfection, CMatrix, SchmidtStrategySpec};
use crate::rational::{frac, int, snap, to_f64, Rational};

#[derive(Debug, Clone, Copy)]
pub struct SnapOptions {
    /// Distance within which a float is replaced by a nearby rational, and
    /// the tolerance of the floating-point promise check.
    pub tol: f64,
    /// Largest number of inputs per player expected; angles are snapped to
    /// denominators at most `m * d_max`.
    pub d_max: u64,
}

impl Default for SnapOptions {
    fn default() -> Self {
        Self { tol: 1e-9, d_max: 64 }
    }
}

/// Entry threshold when looking for the first nonzero entry.
const NONZERO: f64 = 1e-9;

/// `sum_a w^a P_a` with `w = e^{2 pi i / m}`.
fn unitary(ops: &[CMatrix], m: u32) -> CMatrix {
    let d = ops[0].nrows();
    let mut u = CMatrix::zeros(d, d);
    for (a, p) in ops.iter().enumerate() {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / m as f64);
        u += p * w;
    }
    u
}

/// Turns `arg(U_ik) / 2 pi` of the first entry with modulus above `1e-9`,
/// scanning row-major.
fn first_phase(u: &CMatrix) -> Option<f64> {
    for i in 0..u.nrows() {
        for k in 0..u.ncols() {
            let z = u[(i, k)];
            if z.norm() > NONZERO {
                return Some((z.arg() / (2.0 * std::f64::consts::PI)).rem_euclid(1.0));
            }
        }
    }
    None
}

/// Turns a perfect Schmidt strategy into an angle game on the same inputs.
///
/// Each player forms `U = sum_a w^a P_a` for its question and reads off the
/// phase of the first nonzero entry. For a perfect strategy these phases sum
/// to `target / m` on every asked tuple. Phases are then snapped to exact
/// rationals.
pub fn schmidt_reduce(game: &ModMGame, spec: &SchmidtStrategySpec, opts: &SnapOptions) -> Result<AngleGameDiscrete> {
    if game.width() != 1 {
        return Err(Error::Unsupported("reduction needs a single answer coordinate".into()));
    }
    let (perfect, residual) = verify_schmidt_perfection(game, spec)?;
    if !perfect {
        return Err(Error::NotPerfect { value: 1.0 - residual, residual });
    }
    let m = game.modulus();
    let mut phases: Vec<Vec<f64>> = Vec::with_capacity(game.players());
    for j in 0..game.players() {
        let mut row = Vec::with_capacity(game.question_count(j));
        for q in 0..game.question_count(j) {
            let u = unitary(&spec.measurements[j][q], m);
            row.push(first_phase(&u).ok_or(Error::DegenerateUnitary { player: j, question: q })?);
        }
        phases.push(row);
    }
    for e in game.support() {
        let s: f64 = e.x.iter().enumerate().map(|(j, &q)| phases[j][q]).sum();
        let off = s - e.target as f64 / m as f64;
        let dist = (off - off.round()).abs();
        if dist > opts.tol {
            return Err(Error::PromiseViolated(format!(
                "input {:?}: extracted angles miss the target by {dist:e} turns",
                e.x
            )));
        }
    }
    let max_den = m as u64 * opts.d_max;
    let angles = phases
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| {
                    snap(p, max_den, opts.tol)
                        .map(|r| frac(&r))
                        .ok_or(Error::SnapFailed { value: p, max_den })
                })
                .collect::<Result<Vec<Rational>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    AngleGameDiscrete::new(game.clone(), angles)
}

/// Perfect deterministic strategy for an angle game with connected inputs.
///
/// Fix the first asked tuple `(a_1..a_t)` as root. Player 1 maps angle `phi`
/// to `phi + a_2 + ... + a_t` and player `j >= 2` maps `phi` to `phi - a_j`;
/// along every edge of the connection graph these shifted angles stay
/// multiples of `1/m`, and `m` times the shifted angle is the answer. The
/// traversal is breadth-first from the root; questions that are never asked
/// get answer 0.
pub fn synthesize_perfect_strategy(g: &AngleGameDiscrete) -> Result<DeterministicStrategy> {
    let game = g.game();
    let graph = connection_graph(game);
    let comps = graph.components();
    if comps.len() > 1 {
        let describe = |v: usize| -> String {
            let labels: Vec<&str> = graph.vertices[v]
                .iter()
                .enumerate()
                .map(|(j, &q)| game.questions()[j][q].as_str())
                .collect();
            format!("({})", labels.join(", "))
        };
        return Err(Error::Disconnected { first: describe(comps[0][0]), second: describe(comps[1][0]) });
    }
    let t = g.players();
    let m = int(g.modulus() as i64);
    let root = &graph.vertices[0];
    let alpha: Vec<Rational> = root.iter().enumerate().map(|(j, &q)| g.angles()[j][q].clone()).collect();
    let rest: Rational = alpha.iter().skip(1).cloned().sum();
    let mut answers: Vec<Vec<Option<u32>>> = (0..t).map(|j| vec![None; game.question_count(j)]).collect();
    let adj = graph.neighbours();
    let mut seen = vec![false; graph.vertices.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for (j, &q) in graph.vertices[v].iter().enumerate() {
            if answers[j][q].is_some() {
                continue;
            }
            let phi = &g.angles()[j][q];
            let beta = if j == 0 { phi + &rest } else { phi - &alpha[j] };
            let l = frac(&beta) * &m;
            if !l.is_integer() {
                return Err(Error::PromiseViolated(format!(
                    "player {j} question {q}: shifted angle {} is not a multiple of 1/{m}",
                    frac(&beta)
                )));
            }
            answers[j][q] = Some(l.to_integer().try_into().expect("answer below m"));
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    let s = DeterministicStrategy {
        answers: answers.into_iter().map(|v| v.into_iter().map(|a| a.unwrap_or(0)).collect()).collect(),
    };
    let value = evaluate_strategy(game, &s)?;
    if !value.is_one() {
        let v = to_f64(&value);
        return Err(Error::NotPerfect { value: v, residual: 1.0 - v });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::BoyerGame;
    use crate::game::{product_indices, DeterministicStrategy};
    use crate::quantum::{ghz_angle_strategy, winning_probability, QuantumStrategy};
    use crate::rational::rat;

    fn ghz_spec(g: &AngleGameDiscrete) -> SchmidtStrategySpec {
        SchmidtStrategySpec::from_strategy(&ghz_angle_strategy(g).unwrap()).unwrap()
    }

    /// Extracted angles agree with the originals up to per-player offsets
    /// that sum to zero.
    fn assert_round_trip(orig: &AngleGameDiscrete, back: &AngleGameDiscrete) {
        let t = orig.players();
        let mut offsets = Vec::new();
        for j in 0..t {
            let d0 = frac(&(&back.angles()[j][0] - &orig.angles()[j][0]));
            for q in 0..orig.angles()[j].len() {
                assert_eq!(frac(&(&back.angles()[j][q] - &orig.angles()[j][q])), d0);
            }
            offsets.push(d0);
        }
        assert_eq!(frac(&offsets.into_iter().sum::<Rational>()), int(0));
    }

    #[test]
    fn ghz_round_trip_on_boyer_games() {
        for (t, d, m) in [(3, 2, 2), (4, 3, 3), (3, 4, 2), (2, 5, 3)] {
            let orig = BoyerGame::new(t, d, m).unwrap().to_angle();
            let back = schmidt_reduce(orig.game(), &ghz_spec(&orig), &SnapOptions::default()).unwrap();
            back.check_promise().unwrap();
            assert_round_trip(&orig, &back);
        }
    }

    #[test]
    fn product_state_gives_deterministic_phases() {
        let g = crate::game::constant_target_game(3, &[2, 2]).unwrap();
        let s = DeterministicStrategy { answers: vec![vec![1, 2], vec![2, 1]] };
        let g = crate::game::ModMGame::uniform(
            3,
            g.questions().to_vec(),
            product_indices(&[2, 2])
                .into_iter()
                .map(|x| {
                    let target = (s.answers[0][x[0]] + s.answers[1][x[1]]) % 3;
                    (x, target)
                })
                .collect(),
        )
        .unwrap();
        let q = QuantumStrategy::from_deterministic(&g, &s).unwrap();
        let spec = SchmidtStrategySpec::from_strategy(&q).unwrap();
        let a = schmidt_reduce(&g, &spec, &SnapOptions::default()).unwrap();
        assert_eq!(a.angles()[0], vec![rat(1, 3), rat(2, 3)]);
        assert_eq!(a.angles()[1], vec![rat(2, 3), rat(1, 3)]);
    }

    #[test]
    fn rejects_imperfect_strategies() {
        let orig = BoyerGame::new(3, 2, 2).unwrap().to_angle();
        let mut spec = ghz_spec(&orig);
        spec.measurements[1][0].swap(0, 1);
        assert!(matches!(
            schmidt_reduce(orig.game(), &spec, &SnapOptions::default()),
            Err(Error::NotPerfect { .. })
        ));
    }

    #[test]
    fn ghz_wins_angle_games() {
        let g = BoyerGame::new(4, 3, 3).unwrap().to_angle();
        let v = winning_probability(g.game(), &ghz_angle_strategy(&g).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn total_angle_game_is_won() {
        for m in 2..5u32 {
            let tuples = product_indices(&[m as usize, m as usize, m as usize])
                .into_iter()
                .map(|x| (x.iter().map(|&e| rat(e as i64, m as i64)).collect(), rat(1, (m * m * m) as i64)))
                .collect();
            let g = AngleGameDiscrete::from_tuples(m, tuples).unwrap();
            let s = synthesize_perfect_strategy(&g).unwrap();
            assert!(evaluate_strategy(g.game(), &s).unwrap().is_one());
        }
    }

    #[test]
    fn connected_promise_game_is_won() {
        // connected but not total, angles off the 1/m grid
        let tuples = vec![
            (vec![rat(1, 12), rat(1, 4)], rat(1, 3)),
            (vec![rat(1, 12), rat(7, 12)], rat(1, 3)),
            (vec![rat(5, 12), rat(7, 12)], rat(1, 3)),
        ];
        let g = AngleGameDiscrete::from_tuples(3, tuples).unwrap();
        let s = synthesize_perfect_strategy(&g).unwrap();
        assert!(evaluate_strategy(g.game(), &s).unwrap().is_one());
    }

    #[test]
    fn mermin_is_disconnected() {
        let g = BoyerGame::new(3, 2, 2).unwrap().to_angle();
        match synthesize_perfect_strategy(&g) {
            Err(Error::Disconnected { first, second }) => {
                assert_eq!(first, "(0, 0, 0)");
                assert_eq!(second, "(0, 1, 1)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_input_is_trivial() {
        let g = AngleGameDiscrete::from_tuples(2, vec![(vec![rat(1, 4), rat(1, 4)], int(1))]).unwrap();
        let s = synthesize_perfect_strategy(&g).unwrap();
        assert_eq!(s.answers, vec![vec![1], vec![0]]);
    }
}
