use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{dot, PlantedInstance, UniqueGame, VectorSolution};
use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};
use crate::rng::{mean_and_stderr, seeded, standard_normal, uniform, Accumulator};

/// `floor(x) + [frac(x) > r]`; averages to `x` over uniform `r`.
fn bracket(x: f64, r: f64) -> u64 {
    let f = x.floor();
    f as u64 + u64::from(x - f > r)
}

fn counts(block: &[Vec<f64>], k: usize, r: f64) -> Vec<u64> {
    block.iter().map(|w| bracket(2.0 * k as f64 * dot(w, w), r)).collect()
}

/// Answer with the largest `|<g_s, u_i / |u_i|>|` over `s < s_i`; ties go
/// to the smallest `(i, s)`, and answer 0 when every count is zero.
fn select(block: &[Vec<f64>], gs: &[Vec<f64>], s: &[u64]) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, w) in block.iter().enumerate() {
        let len = dot(w, w).sqrt();
        if len == 0.0 {
            continue;
        }
        for g in gs.iter().take(s[i] as usize) {
            let xi = (dot(g, w) / len).abs();
            if xi > best.1 {
                best = (i, xi);
            }
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub win: Rational,
    pub r: f64,
}

fn check_feasible(sol: &VectorSolution) -> Result<()> {
    let res = sol.residuals();
    if res.orthogonality > 1e-6 || res.normalization > 1e-6 {
        return Err(Error::Infeasible(format!(
            "orthogonality residual {:.3e}, normalization residual {:.3e}",
            res.orthogonality, res.normalization
        )));
    }
    Ok(())
}

/// Shared threshold `r`, `2k` shared Gaussian vectors, per-answer counts
/// `s_i = [2k |u_i|^2]_r`, then the answer whose normalized vector has the
/// largest projection. Deterministic in `seed`.
pub fn round(sol: &VectorSolution, game: &UniqueGame, seed: u64) -> Result<Rounding> {
    check_feasible(sol)?;
    let k = sol.k;
    let mut rng = seeded(seed);
    let r = uniform(&mut rng);
    let gs: Vec<Vec<f64>> = (0..2 * k).map(|_| (0..sol.d).map(|_| standard_normal(&mut rng)).collect()).collect();
    let pick = |block: &Vec<Vec<f64>>| select(block, &gs, &counts(block, k, r));
    let a: Vec<usize> = sol.u.iter().map(pick).collect();
    let b: Vec<usize> = sol.v.iter().map(pick).collect();
    let win = game.value(&a, &b);
    Ok(Rounding { a, b, win, r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiagnostics {
    pub x: usize,
    pub y: usize,
    /// `1/2 sum_i |u^x_i - v^y_{perm(i)}|^2`.
    pub eps: f64,
    /// `1/2 |u~^x_i - v~^y_{perm(i)}|^2` on normalized vectors.
    pub eps_i: Vec<f64>,
    /// Counts `s^x_i` and `s^y_{perm(i)}` at the reference threshold.
    pub s_x: Vec<u64>,
    pub s_y: Vec<u64>,
    /// `|M| = sum_i min(s^x_i, s^y_{perm(i)})`, `|M_c|` the excess of the max.
    pub m: u64,
    pub m_c: u64,
    /// Monte Carlo over `r` of `|M_c|`.
    pub m_c_mean: f64,
    pub m_c_se: f64,
    pub m_min: u64,
    /// Monte Carlo over `r` of the `M`-average of `eps_i`.
    pub avg_eps_mean: f64,
    pub avg_eps_se: f64,
}

impl PairDiagnostics {
    /// `4k sqrt(2 eps)`.
    pub fn m_c_bound(&self) -> f64 {
        4.0 * self.eps_i.len() as f64 * (2.0 * self.eps).sqrt()
    }

    /// `4 eps`.
    pub fn avg_eps_bound(&self) -> f64 {
        4.0 * self.eps
    }

    /// Both bounds within `sigmas` standard errors, and `|M| >= k/2` on
    /// every sampled threshold; only meaningful for `eps <= 1/128`.
    pub fn within_bounds(&self, sigmas: f64) -> bool {
        let k = self.eps_i.len() as f64;
        self.m_c_mean <= self.m_c_bound() + sigmas * self.m_c_se + 1e-12
            && self.avg_eps_mean <= self.avg_eps_bound() + sigmas * self.avg_eps_se + 1e-12
            && self.m_min as f64 >= k / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingDiagnostics {
    pub r: f64,
    pub pairs: Vec<PairDiagnostics>,
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let len = dot(w, w).sqrt();
    if len == 0.0 {
        vec![0.0; w.len()]
    } else {
        w.iter().map(|a| a / len).collect()
    }
}

fn half_dist2(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
}

/// Per-pair matching quantities of the rounding, with `r_samples` uniform
/// thresholds for the expectations over `r`.
pub fn diagnostics(sol: &VectorSolution, game: &UniqueGame, seed: u64, r_samples: usize) -> Result<RoundingDiagnostics> {
    check_feasible(sol)?;
    let k = sol.k;
    let mut rng = seeded(seed);
    let r0 = uniform(&mut rng);
    let rs: Vec<f64> = (0..r_samples.max(1)).map(|_| uniform(&mut rng)).collect();
    let pairs = game
        .pairs()
        .iter()
        .map(|p| {
            let (bu, bv) = (&sol.u[p.x], &sol.v[p.y]);
            let eps = (0..k).map(|i| half_dist2(&bu[i], &bv[p.perm[i]])).sum();
            let eps_i: Vec<f64> = (0..k).map(|i| half_dist2(&normalized(&bu[i]), &normalized(&bv[p.perm[i]]))).collect();
            let matched = |r: f64| -> (Vec<u64>, Vec<u64>) {
                let sx = counts(bu, k, r);
                let sy_all = counts(bv, k, r);
                (sx, (0..k).map(|i| sy_all[p.perm[i]]).collect())
            };
            let sizes = |sx: &[u64], sy: &[u64]| -> (u64, u64) {
                let m: u64 = sx.iter().zip(sy).map(|(a, b)| *a.min(b)).sum();
                let mx: u64 = sx.iter().zip(sy).map(|(a, b)| *a.max(b)).sum();
                (m, mx - m)
            };
            let (s_x, s_y) = matched(r0);
            let (m, m_c) = sizes(&s_x, &s_y);
            let mut mc_vals = Vec::with_capacity(rs.len());
            let mut avg_vals = Vec::with_capacity(rs.len());
            let mut m_min = u64::MAX;
            for &r in &rs {
                let (sx, sy) = matched(r);
                let (m, mc) = sizes(&sx, &sy);
                m_min = m_min.min(m);
                mc_vals.push(mc as f64);
                let weighted: f64 = (0..k).map(|i| sx[i].min(sy[i]) as f64 * eps_i[i]).sum();
                avg_vals.push(if m == 0 { 0.0 } else { weighted / m as f64 });
            }
            let (m_c_mean, m_c_se) = mean_and_stderr(&mc_vals);
            let (avg_eps_mean, avg_eps_se) = mean_and_stderr(&avg_vals);
            PairDiagnostics {
                x: p.x,
                y: p.y,
                eps,
                eps_i,
                s_x,
                s_y,
                m,
                m_c,
                m_c_mean,
                m_c_se,
                m_min,
                avg_eps_mean,
                avg_eps_se,
            }
        })
        .collect();
    Ok(RoundingDiagnostics { r: r0, pairs })
}

/// Random rotation generator with unit Frobenius norm.
fn generator(k: usize, rng: &mut crate::rng::SeededRng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let g = standard_normal(rng);
            a[(i, j)] = g;
            a[(j, i)] = -g;
        }
    }
    let n = a.norm();
    if n > 0.0 {
        a / n
    } else {
        a
    }
}

/// `exp(theta A)` with `1 - tr / k = eps`, found by bisection.
fn rotation_for(a: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    if eps == 0.0 {
        return Ok(DMatrix::identity(k, k));
    }
    let loss = |theta: f64| 1.0 - (a * theta).exp().trace() / k as f64;
    let mut hi = 1e-3;
    while loss(hi) < eps {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::InvalidParameter(format!("cannot reach eps = {eps} by rotation")));
        }
    }
    let mut lo = hi / 2.0;
    if loss(lo) >= eps {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if loss(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((a * (0.5 * (lo + hi))).exp())
}

/// Rotates every `v`-block of the planted spread solution by a random
/// small rotation so that each pair has `eps_xy = eps` and the objective is
/// `1 - eps`. Orthogonality and normalization are kept exactly; cross
/// products may turn slightly negative.
pub fn perturb_planted(inst: &PlantedInstance, eps: f64, seed: u64) -> Result<VectorSolution> {
    let k = inst.game.k();
    if !(0.0..1.0).contains(&eps) || (k < 2 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("cannot perturb to eps = {eps} with k = {k}")));
    }
    let mut base = inst.spread_solution();
    let mut rng = seeded(seed);
    let s = 1.0 / (k as f64).sqrt();
    for (y, tau) in inst.tau_y.iter().enumerate() {
        let rot = rotation_for(&generator(k, &mut rng), eps)?;
        base.v[y] = (0..k).map(|j| rot.column(tau[j]).iter().map(|c| c * s).collect()).collect();
    }
    VectorSolution::new(&inst.game, base.u, base.v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    pub mean_loss: f64,
    pub stderr: f64,
    /// `sqrt(eps ln k)`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub k: usize,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `mean_loss` against `scale` through the origin.
    pub constant: f64,
}

/// Rounds perturbed planted solutions for every `eps` and seed. The same
/// instance, rotation generators and rounding seeds are reused across
/// `eps`, so the curves are coupled.
pub fn perturbation_study(k: usize, epsilons: &[f64], seeds: usize, base_seed: u64) -> Result<StudyReport> {
    let inst = PlantedInstance::new(k, 8, 8, base_seed)?;
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let losses: Vec<f64> = (0..seeds as u64)
                .into_par_iter()
                .map(|s| -> Result<f64> {
                    let sol = perturb_planted(&inst, eps, base_seed.wrapping_add(1 + s))?;
                    let r = round(&sol, &inst.game, base_seed.wrapping_add(1_000_003 + s))?;
                    Ok(1.0 - to_f64(&r.win))
                })
                .collect::<Result<_>>()?;
            let mut acc = Accumulator::default();
            losses.iter().for_each(|&l| acc.push(l));
            Ok(StudyRow { eps, mean_loss: acc.mean(), stderr: acc.stderr(), scale: (eps * (k as f64).ln()).sqrt() })
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), r| (n + r.mean_loss * r.scale, d + r.scale * r.scale));
    Ok(StudyReport { k, constant: if den > 0.0 { num / den } else { 0.0 }, rows })
}

pub fn study_csv(report: &StudyReport) -> String {
    let mut out = String::from("eps,mean_loss,stderr,sqrt_eps_log_k\n");
    for r in &report.rows {
        out.push_str(&format!("{},{},{},{}\n", r.eps, r.mean_loss, r.stderr, r.scale));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ugsdp::{solve_sdp, SdpOptions};
    use num_traits::One;

    #[test]
    fn bracket_rounding() {
        assert_eq!(bracket(2.3, 0.2), 3);
        assert_eq!(bracket(2.3, 0.5), 2);
        assert_eq!(bracket(4.0, 0.0), 4);
        let mean: f64 = (0..1000).map(|i| bracket(1.37, (i as f64 + 0.5) / 1000.0) as f64).sum::<f64>() / 1000.0;
        assert!((mean - 1.37).abs() < 1e-3);
    }

    #[test]
    fn perfect_solutions_round_perfectly() {
        let g = UniqueGame::identity(3, 3, 3).unwrap();
        let sol = VectorSolution::from_deterministic(&g, &[1, 1, 1], &[1, 1, 1]).unwrap();
        for seed in 0..20 {
            let r = round(&sol, &g, seed).unwrap();
            assert!(r.win.is_one());
        }
        let inst = PlantedInstance::new(4, 5, 5, 3).unwrap();
        let (a, b) = inst.labeling();
        let integral = VectorSolution::from_deterministic(&inst.game, &a, &b).unwrap();
        let spread = inst.spread_solution();
        for seed in 0..20 {
            assert!(round(&integral, &inst.game, seed).unwrap().win.is_one());
            assert!(round(&spread, &inst.game, seed).unwrap().win.is_one());
        }
        let d = diagnostics(&spread, &inst.game, 1, 100).unwrap();
        assert!(d.pairs.iter().all(|p| p.eps.abs() < 1e-12 && p.m_c_mean == 0.0));
    }

    #[test]
    fn rounding_is_reproducible_and_classical() {
        let g = UniqueGame::chsh();
        let sol = solve_sdp(&g, &SdpOptions::default()).unwrap().solution;
        for seed in 0..100 {
            let r = round(&sol, &g, seed).unwrap();
            assert!(to_f64(&r.win) <= 0.75 + 1e-9);
            assert_eq!(round(&sol, &g, seed).unwrap(), r);
        }
    }

    #[test]
    fn perturbed_planted_diagnostics() {
        let inst = PlantedInstance::new(4, 4, 4, 11).unwrap();
        for eps in [1.0 / 128.0, 0.002] {
            let sol = perturb_planted(&inst, eps, 5).unwrap();
            assert!((sol.objective - (1.0 - eps)).abs() < 1e-9);
            let res = sol.residuals();
            assert!(res.orthogonality < 1e-12 && res.normalization < 1e-12);
            let d = diagnostics(&sol, &inst.game, 6, 2000).unwrap();
            for p in &d.pairs {
                assert!((p.eps - eps).abs() < 1e-9);
                assert_eq!(p.m + p.m_c, p.s_x.iter().zip(&p.s_y).map(|(a, b)| *a.max(b)).sum::<u64>());
                assert!(p.within_bounds(3.0), "{p:?}");
            }
        }
    }

    #[test]
    fn study_loss_shrinks_with_eps() {
        let rep = perturbation_study(4, &[0.04, 0.01, 0.0025, 0.0], 64, 2).unwrap();
        let losses: Vec<f64> = rep.rows.iter().map(|r| r.mean_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{losses:?}");
        assert_eq!(losses[3], 0.0);
        assert!(losses.iter().all(|&l| l <= 1.0));
        assert!(study_csv(&rep).starts_with("eps,mean_loss,stderr,sqrt_eps_log_k\n"));
    }

    #[test]
    fn rejects_infeasible_vectors() {
        let g = UniqueGame::identity(2, 1, 1).unwrap();
        let bad = VectorSolution::new(&g, vec![vec![vec![1.0], vec![1.0]]], vec![vec![vec![1.0], vec![0.0]]]).unwrap();
        assert!(matches!(round(&bad, &g, 0), Err(Error::Infeasible(_))));
    }
}
