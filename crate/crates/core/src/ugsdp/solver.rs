use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, UniqueGame, VectorSolution};
use crate::error::{Error, Result};
use crate::game::ModMGame;
use num_traits::Zero;

use crate::rational::{to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Stop once primal and dual residuals fall below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep at most this many dimensions when factoring the Gram matrix.
    pub rank_cap: Option<usize>,
    /// Keep `<u^x_i, v^y_j> >= 0` as a constraint.
    pub nonnegative: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 20_000, rank_cap: None, nonnegative: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpResult {
    /// Best feasible iterate.
    pub solution: VectorSolution,
    pub converged: bool,
    pub iterations: usize,
    /// Incumbent objective at every check; nondecreasing.
    pub history: Vec<f64>,
}

const CHECK_EVERY: usize = 10;
/// Constraint tolerance for accepting an iterate.
const FEASIBLE: f64 = 1e-6;

/// Rows of a factor `F` with `F F^T` the PSD part of `m`, largest
/// eigenvalues first.
fn psd_factor(m: &DMatrix<f64>, rank_cap: Option<usize>) -> (DMatrix<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let full = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])] * eig.eigenvalues[order[c]].sqrt());
    let x = &full * full.transpose();
    let keep = rank_cap.map_or(order.len(), |r| r.min(order.len())).max(1);
    let factor = if order.is_empty() { DMatrix::zeros(n, 1) } else { full.columns(0, keep).into_owned() };
    (x, factor)
}

/// Scaled ADMM for `max <C, X>` over `X >= 0` (PSD) intersected with the
/// set `project` maps onto. `check` sees the PSD factor periodically.
fn admm(
    c: &DMatrix<f64>,
    start: Option<DMatrix<f64>>,
    project: impl Fn(&mut DMatrix<f64>),
    opts: &SdpOptions,
    mut check: impl FnMut(&DMatrix<f64>) -> bool,
) -> (usize, bool) {
    let n = c.nrows();
    let scale = c.norm().max(1e-300);
    let c = c / scale;
    let mut z = start.unwrap_or_else(|| DMatrix::zeros(n, n));
    project(&mut z);
    let mut u = DMatrix::zeros(n, n);
    let mut rho = 1.0;
    for iter in 1..=opts.max_iter {
        let (x, factor) = psd_factor(&(&z - &u + &c / rho), opts.rank_cap);
        let z_old = z;
        z = &x + &u;
        project(&mut z);
        u += &x - &z;
        let r = (&x - &z).norm();
        let s = rho * (&z - &z_old).norm();
        let small = r < opts.tol && s < opts.tol;
        if small || iter % CHECK_EVERY == 0 || iter == opts.max_iter {
            let accepted = check(&factor);
            if small && accepted {
                return (iter, true);
            }
        }
        if iter % CHECK_EVERY == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u /= 2.0;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    (opts.max_iter, false)
}

/// Orthogonalizes a block (largest vectors first), keeps the original
/// lengths, then rescales so the squared lengths sum to one.
fn repair_block(block: &mut [Vec<f64>]) {
    let norms: Vec<f64> = block.iter().map(|w| dot(w, w).sqrt()).collect();
    let mut order: Vec<usize> = (0..block.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &i in &order {
        let mut w = block[i].clone();
        for q in &basis {
            let c = dot(&w, q);
            for (a, b) in w.iter_mut().zip(q) {
                *a -= c * b;
            }
        }
        let len = dot(&w, &w).sqrt();
        if norms[i] < 1e-12 || len < 1e-12 {
            block[i].iter_mut().for_each(|a| *a = 0.0);
            continue;
        }
        let q: Vec<f64> = w.iter().map(|a| a / len).collect();
        block[i] = q.iter().map(|a| a * norms[i]).collect();
        basis.push(q);
    }
    let total: f64 = block.iter().map(|w| dot(w, w)).sum();
    if total < 1e-24 {
        block[0][0] = 1.0;
    } else {
        let f = total.sqrt();
        block.iter_mut().flatten().for_each(|a| *a /= f);
    }
}

fn gram_of(sol: &VectorSolution) -> DMatrix<f64> {
    let rows: Vec<&Vec<f64>> = sol.u.iter().chain(&sol.v).flatten().collect();
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| dot(rows[i], rows[j]))
}

pub fn solve_sdp(game: &UniqueGame, opts: &SdpOptions) -> Result<SdpResult> {
    solve_sdp_from(game, opts, None)
}

/// Maximizes `sum_xy w_xy sum_i <u^x_i, v^y_{perm(i)}>` over orthogonal
/// blocks whose squared lengths sum to one (and, by default, nonnegative
/// cross inner products). A feasible `start` seeds both the iteration and
/// the incumbent.
pub fn solve_sdp_from(game: &UniqueGame, opts: &SdpOptions, start: Option<&VectorSolution>) -> Result<SdpResult> {
    let (k, nx, ny) = (game.k(), game.xs().len(), game.ys().len());
    let n = k * (nx + ny);
    let ui = |x: usize, i: usize| x * k + i;
    let vi = |y: usize, j: usize| (nx + y) * k + j;
    let mut c = DMatrix::zeros(n, n);
    for p in game.pairs() {
        let w = to_f64(&p.weight) / 2.0;
        for i in 0..k {
            c[(ui(p.x, i), vi(p.y, p.perm[i]))] += w;
            c[(vi(p.y, p.perm[i]), ui(p.x, i))] += w;
        }
    }
    let nonneg = opts.nonnegative;
    let project = |z: &mut DMatrix<f64>| {
        for b in 0..nx + ny {
            let o = b * k;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        z[(o + i, o + j)] = 0.0;
                    }
                }
            }
            let shift = (1.0 - (0..k).map(|i| z[(o + i, o + i)]).sum::<f64>()) / k as f64;
            for i in 0..k {
                z[(o + i, o + i)] += shift;
            }
        }
        if nonneg {
            for r in 0..nx * k {
                for s in nx * k..n {
                    let v = z[(r, s)].max(0.0);
                    z[(r, s)] = v;
                    z[(s, r)] = v;
                }
            }
        }
    };

    let mut best: Option<VectorSolution> = start.filter(|s| s.is_feasible(FEASIBLE, nonneg)).cloned();
    if start.is_some() && best.is_none() {
        return Err(Error::Infeasible("starting solution violates the constraints".into()));
    }
    // first player answers 0, second best-responds
    let fallback = {
        let a = vec![0; nx];
        let b: Vec<usize> = (0..ny)
            .map(|y| {
                let mut score = vec![Rational::zero(); k];
                for p in game.pairs().iter().filter(|p| p.y == y) {
                    score[p.perm[0]] += &p.weight;
                }
                (0..k).fold(0, |best, j| if score[j] > score[best] { j } else { best })
            })
            .collect();
        VectorSolution::from_deterministic(game, &a, &b)?
    };
    let mut history = Vec::new();
    let check = |factor: &DMatrix<f64>| {
        let row = |r: usize| factor.row(r).iter().copied().collect::<Vec<f64>>();
        let mut u: Vec<Vec<Vec<f64>>> = (0..nx).map(|x| (0..k).map(|i| row(ui(x, i))).collect()).collect();
        let mut v: Vec<Vec<Vec<f64>>> = (0..ny).map(|y| (0..k).map(|j| row(vi(y, j))).collect()).collect();
        u.iter_mut().chain(v.iter_mut()).for_each(|b| repair_block(b));
        let mut accepted = false;
        if let Ok(sol) = VectorSolution::new(game, u, v) {
            accepted = sol.is_feasible(FEASIBLE, nonneg);
            if accepted && best.as_ref().is_none_or(|b| sol.objective > b.objective) {
                best = Some(sol);
            }
        }
        history.push(best.as_ref().map_or(fallback.objective, |b| b.objective.max(fallback.objective)));
        accepted
    };
    let (iterations, converged) = admm(&c, start.map(gram_of), project, opts, check);
    let solution = match best {
        Some(b) if b.objective >= fallback.objective => b,
        _ => fallback,
    };
    Ok(SdpResult { solution, converged, iterations, history })
}

/// Entangled bias of a two-player XOR game: the maximum of
/// `sum_xy c_xy <a_x, b_y>` over unit vectors, with `c_xy` the signed weights.
pub fn xor2_entangled_bias(game: &ModMGame) -> Result<f64> {
    if game.players() != 2 || !game.is_xor() {
        return Err(Error::Unsupported("two-player XOR games only".into()));
    }
    let nx = game.question_count(0);
    let ny = game.question_count(1);
    let n = nx + ny;
    let mut c = DMatrix::zeros(n, n);
    for e in game.support() {
        let s = if e.target == 0 { 1.0 } else { -1.0 };
        let w = s * to_f64(&e.weight) / 2.0;
        c[(e.x[0], nx + e.x[1])] += w;
        c[(nx + e.x[1], e.x[0])] += w;
    }
    let project = |z: &mut DMatrix<f64>| {
        for i in 0..n {
            z[(i, i)] = 1.0;
        }
    };
    let mut best = f64::NEG_INFINITY;
    let check = |factor: &DMatrix<f64>| {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let w: Vec<f64> = factor.row(r).iter().copied().collect();
                let len = dot(&w, &w).sqrt();
                if len < 1e-12 {
                    let mut e = vec![0.0; w.len()];
                    e[0] = 1.0;
                    e
                } else {
                    w.iter().map(|a| a / len).collect()
                }
            })
            .collect();
        let mut val = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                val += 2.0 * c[(i, nx + j)] * dot(&rows[i], &rows[nx + j]);
            }
        }
        best = best.max(val);
        true
    };
    let opts = SdpOptions { tol: 1e-10, max_iter: 50_000, rank_cap: None, nonnegative: false };
    admm(&c, None, project, &opts, check);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{classical_value, constant_target_game};
    use crate::hypnorm::{build_ht, hypergraph_norm, GameTensor};
    use crate::quantum::{chsh_game, chsh_optimal_strategy};
    use crate::rng::seeded;
    use crate::ugsdp::quantum_strategy_to_vectors;
    use rand::Rng;

    #[test]
    fn identity_games_reach_one() {
        for k in 1..=3 {
            let g = UniqueGame::identity(k, 2, 3).unwrap();
            let r = solve_sdp(&g, &SdpOptions::default()).unwrap();
            assert!((r.solution.objective - 1.0).abs() < 1e-6, "k={k}: {}", r.solution.objective);
            assert!(r.solution.is_feasible(1e-6, true));
        }
    }

    #[test]
    fn chsh_relaxation_beats_the_quantum_value() {
        let g = UniqueGame::chsh();
        let r = solve_sdp(&g, &SdpOptions::default()).unwrap();
        assert!(r.solution.objective >= 0.8535, "{}", r.solution.objective);
        assert!(r.solution.objective <= 1.0 + 1e-6);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        let q = quantum_strategy_to_vectors(&g, &chsh_optimal_strategy()).unwrap();
        let warm = solve_sdp_from(&g, &SdpOptions { max_iter: 50, ..Default::default() }, Some(&q)).unwrap();
        assert!(warm.solution.objective >= q.objective - 1e-12);
        let loose = solve_sdp(&g, &SdpOptions { nonnegative: false, ..Default::default() }).unwrap();
        assert!(loose.solution.objective >= r.solution.objective - 1e-6);
    }

    #[test]
    fn random_games_dominate_classical_value() {
        for seed in 0..4 {
            let g = UniqueGame::random(3, 3, 3, seed).unwrap();
            let (cv, _, _) = g.classical_value(1 << 20).unwrap();
            let r = solve_sdp(&g, &SdpOptions { tol: 1e-6, ..Default::default() }).unwrap();
            assert!(r.solution.objective >= to_f64(&cv) - 1e-6);
            assert!(r.solution.objective <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn xor_entangled_bias() {
        assert!((xor2_entangled_bias(&chsh_game()).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
        let constant = constant_target_game(2, &[2, 2]).unwrap();
        assert!((xor2_entangled_bias(&constant).unwrap() - 1.0).abs() < 1e-6);
        let mut rng = seeded(31);
        let h2 = build_ht(2).unwrap();
        for _ in 0..10 {
            let entries = (0..9).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let t = GameTensor::uniform(vec![3, 3], entries).unwrap();
            let g = t.to_game().unwrap();
            let b = xor2_entangled_bias(&g).unwrap();
            let classical = 2.0 * to_f64(&classical_value(&g).unwrap().omega) - 1.0;
            assert!(b >= classical - 1e-6);
            assert!(b <= hypergraph_norm(&t, &h2).unwrap().norm + 1e-6);
        }
    }
}
