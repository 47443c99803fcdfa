//! End-to-end acceptance checks, run without the test harness so that the
//! PASS/FAIL line of every criterion is always printed. Exits nonzero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use num_traits::One;
use rand::Rng;

use nonlocal_core::angle::{
    boyer_strategy_search, floor_strategy_trial, floor_strategy_value, power_of_two_strategy_value, schmidt_reduce,
    semi_trivial_value, uag_conditional_profile, BoyerGame, SchmidtStrategySpec, SnapOptions,
};
use nonlocal_core::game::{
    classical_value, cleve_slofstra_check, evaluate_strategy, mermin_game, xor_parallel_repetition,
    DeterministicStrategy, RepetitionMode,
};
use nonlocal_core::gowers::{
    gowers_norm, gowers_product_check, line_game, modified_magic_square_tau, parallel_repetition_bound,
    polynomial_split, rounding_identity_estimate, verify_split, von_neumann_check, FiniteAbelianGroup, FpPolynomial,
    GroupFunction, LinearFormsGame, LinearFormsSystem, AffineForm, DEFAULT_BUDGET,
};
use nonlocal_core::hypnorm::{
    build_ht, extract_classical_strategy, hypergraph_norm, strategy_bias, verify_ht_properties, GameTensor,
};
use nonlocal_core::quantum::{ghz_angle_strategy, operator_cs_check, winning_probability, CMatrix};
use nonlocal_core::rational::{rat, to_f64, Rational};
use nonlocal_core::rng::{seeded, SeededRng};
use nonlocal_core::ugsdp::{
    diagnostics, perturb_planted, perturbation_study, round, solve_sdp, xor2_entangled_bias, PlantedInstance,
    SdpOptions, UniqueGame,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn parse(s: &str) -> Rational {
    nonlocal_core::rational::parse_rational(s).unwrap()
}

fn table_lower_bounds() -> Check {
    let start = Instant::now();
    let expected = [
        (2, ["1", "3/4", "2/3", "29/48", "17/30", "781/1440", "166/315", "8341/16128"]),
        (3, ["1", "3/4", "2/3", "115/192", "11/20", "785/1536", "403/840", "260451/573440"]),
    ];
    for (m, row) in expected {
        for (i, want) in row.iter().enumerate() {
            let t = i + 2;
            let v = semi_trivial_value(t, m).map_err(|e| e.to_string())?;
            ensure(v.exact() == Some(&parse(want)), || format!("t={t} m={m}: got [{}, {}], want {want}", v.lower, v.upper))?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("16 fractions exact in {secs:.2} s"))
}

fn table_upper_bounds() -> Check {
    let budget = 1u128 << 50;
    let cases = [(3, 2, 9, "3/4"), (4, 2, 8, "43/64"), (3, 3, 9, "61/81")];
    let mut notes = Vec::new();
    for (t, m, d_max, want) in cases {
        let r = boyer_strategy_search(t, m, 1..=d_max, budget).map_err(|e| e.to_string())?;
        let (d, v) = r.min().cloned().ok_or("no D completed")?;
        ensure(!r.is_partial(), || format!("t={t} m={m}: skipped {:?}, completed {:?}", r.skipped, r.completed()))?;
        ensure(v == parse(want), || format!("t={t} m={m}: min {v} at D={d}, want {want}"))?;
        notes.push(format!("({t},{m})={v}@D={d}"));
    }
    for e in 1..=3u32 {
        let formula = rat(2, 3) + Rational::new(1.into(), (3 * 4i64.pow(e)).into());
        let strategy = power_of_two_strategy_value(e).map_err(|e| e.to_string())?;
        let game = BoyerGame::new(4, 1 << e, 2).map_err(|e| e.to_string())?.to_game();
        let search = classical_value(&game).map_err(|e| e.to_string())?.omega;
        ensure(strategy == formula && search == formula, || {
            format!("D={}: formula {formula}, strategy {strategy}, search {search}", 1 << e)
        })?;
    }
    Ok(format!("{}; formula exact at D=2,4,8", notes.join(" ")))
}

fn mermin() -> Check {
    let omega = classical_value(&mermin_game()).map_err(|e| e.to_string())?.omega;
    ensure(omega == rat(3, 4), || format!("classical value {omega}"))?;
    let boyer = BoyerGame::new(3, 2, 2).map_err(|e| e.to_string())?.to_angle();
    let s = ghz_angle_strategy(&boyer).map_err(|e| e.to_string())?;
    let p = winning_probability(&boyer.to_game(), &s).map_err(|e| e.to_string())?;
    ensure((p - 1.0).abs() <= 1e-9, || format!("GHZ wins with {p}"))?;

    let spec = SchmidtStrategySpec::from_strategy(&s).map_err(|e| e.to_string())?;
    let reduced = schmidt_reduce(&boyer.to_game(), &spec, &SnapOptions::default()).map_err(|e| e.to_string())?;
    reduced.check_promise().map_err(|e| e.to_string())?;
    let m = reduced.modulus() as f64;
    let mut worst: f64 = 0.0;
    for e in reduced.game().support() {
        let sum: f64 = e.x.iter().enumerate().map(|(j, &q)| to_f64(&reduced.angles()[j][q])).sum();
        let diff = sum - e.target as f64 / m;
        worst = worst.max((diff - diff.round()).abs());
    }
    ensure(worst <= 1e-9, || format!("promise residual {worst:e}"))?;
    let p2 = winning_probability(&reduced.to_game(), &ghz_angle_strategy(&reduced).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure((p2 - 1.0).abs() <= 1e-9, || format!("reduced game won with {p2}"))?;
    Ok(format!("omega=3/4, GHZ win {p:.12}, promise residual {worst:.1e}"))
}

fn profile_shapes() -> Check {
    let rows = uag_conditional_profile(4, 3, 64).map_err(|e| e.to_string())?;
    ensure(rows.len() == 64 && rows.iter().all(|r| r.argmax == 2), || {
        format!("argmax values {:?}", rows.iter().map(|r| r.argmax).collect::<Vec<_>>())
    })?;
    let v = semi_trivial_value(5, 2).map_err(|e| e.to_string())?;
    ensure(v.breakpoints == vec![rat(1, 2)] && v.uncertain.is_empty(), || {
        format!("breakpoints {:?}, uncertain {:?}", v.breakpoints, v.uncertain)
    })?;
    Ok("(4,3) argmax l=2 on 64 points; (5,2) switch at exactly 1/2".into())
}

fn floor_trials() -> Check {
    let mut notes = Vec::new();
    for (seed, (t, m)) in [(3, 2), (4, 2), (3, 3)].into_iter().enumerate() {
        let (mean, se) = floor_strategy_trial(t, m, 100 + seed as u64, 1_000_000).map_err(|e| e.to_string())?;
        let exact = to_f64(&floor_strategy_value(t, m));
        let z = (mean - exact) / se;
        ensure(z.abs() <= 3.0, || format!("t={t} m={m}: {mean} vs {exact}, z={z:.2}"))?;
        notes.push(format!("({t},{m}) z={z:+.2}"));
    }
    Ok(notes.join(", "))
}

fn random_tensor(dims: &[usize], rng: &mut SeededRng) -> GameTensor {
    let size: usize = dims.iter().product();
    let entries = (0..size).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let marginals = dims
        .iter()
        .map(|&d| {
            let w: Vec<i64> = (0..d).map(|_| rng.gen_range(1..5)).collect();
            let total: i64 = w.iter().sum();
            w.into_iter().map(|x| rat(x, total)).collect()
        })
        .collect();
    GameTensor::new(dims.to_vec(), entries, marginals).unwrap()
}

fn all_sign_strategies(dims: &[usize]) -> Vec<Vec<Vec<i8>>> {
    let total: usize = dims.iter().sum();
    (0..1u64 << total)
        .map(|mask| {
            let mut bit = 0;
            dims.iter()
                .map(|&d| {
                    (0..d)
                        .map(|_| {
                            bit += 1;
                            if mask >> (bit - 1) & 1 == 1 { -1 } else { 1 }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn hypergraph_suite() -> Check {
    for t in 2..=6 {
        let h = build_ht(t).map_err(|e| e.to_string())?;
        let r = verify_ht_properties(&h);
        ensure(r.all_hold(), || format!("H({t}): {:?}", r.violations))?;
    }
    let chsh = GameTensor::uniform(vec![2, 2], vec![1, 1, 1, -1]).map_err(|e| e.to_string())?;
    let n = hypergraph_norm(&chsh, &build_ht(2).unwrap()).map_err(|e| e.to_string())?.norm;
    ensure((n - 2f64.powf(-0.25)).abs() <= 1e-12, || format!("CHSH norm {n}"))?;

    let mut rng = seeded(2024);
    let h3 = build_ht(3).unwrap();
    for i in 0..100 {
        let dims: Vec<usize> = (0..3).map(|_| rng.gen_range(2..4)).collect();
        let tensor = random_tensor(&dims, &mut rng);
        let norm = hypergraph_norm(&tensor, &h3).map_err(|e| e.to_string())?.norm;
        for s in all_sign_strategies(&dims) {
            let b = to_f64(&strategy_bias(&tensor, &s).map_err(|e| e.to_string())?);
            ensure(b <= norm + 1e-9, || format!("game {i}: bias {b} > norm {norm}"))?;
        }
        let ex = extract_classical_strategy(&tensor, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(ex.bias_f64() >= norm.powi(8) - 1e-12, || format!("game {i}: extracted {} < {}", ex.bias_f64(), norm.powi(8)))?;
    }
    let h2 = build_ht(2).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let dims: Vec<usize> = (0..2).map(|_| rng.gen_range(2..5)).collect();
        let tensor = random_tensor(&dims, &mut rng);
        let norm = hypergraph_norm(&tensor, &h2).map_err(|e| e.to_string())?.norm;
        let q = xor2_entangled_bias(&tensor.to_game().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(q <= norm + 1e-6, || format!("2-player game {i}: entangled bias {q} > norm {norm}"))?;
        worst = worst.max(q - norm);
    }
    Ok(format!("H(2..6) valid, CHSH norm 2^-1/4, 100+100 random games; max(beta* - norm) = {worst:.3e}"))
}

fn random_function(group: FiniteAbelianGroup, rng: &mut SeededRng) -> GroupFunction {
    let values = (0..group.order())
        .map(|_| Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    GroupFunction::new(group, values).unwrap()
}

fn gowers_suite() -> Check {
    let mut rng = seeded(77);
    let groups = [vec![2], vec![3], vec![4], vec![5], vec![2, 2]];
    let mut worst: f64 = 0.0;
    for moduli in groups {
        let group = FiniteAbelianGroup::new(moduli.clone()).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let f = random_function(group.clone(), &mut rng);
            for s in 0..=2 {
                let (l, r) = gowers_product_check(&f, 2, s).map_err(|e| e.to_string())?;
                worst = worst.max((l - r).abs());
                ensure((l - r).abs() <= 1e-9, || format!("{moduli:?} U^{}: {l} vs {r}", s + 1))?;
            }
        }
    }
    for p in [5u64, 7] {
        let f = GroupFunction::from_fn(FiniteAbelianGroup::cyclic(p).unwrap(), |x| {
            let x = x[0] as f64;
            Complex64::from_polar(1.0, std::f64::consts::TAU * x * x / p as f64)
        });
        let n = gowers_norm(&f, 2).map_err(|e| e.to_string())?;
        ensure((n - (p as f64).powf(-0.25)).abs() <= 1e-9, || format!("p={p}: U^2 {n}"))?;
    }
    let magic = line_game(3, 3, 2, modified_magic_square_tau()).map_err(|e| e.to_string())?;
    let vn = von_neumann_check(&magic, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(vn.exact && vn.holds && vn.s == 2, || format!("{vn:?}"))?;

    let z3 = FiniteAbelianGroup::cyclic(3).unwrap();
    let sys = LinearFormsSystem::new(
        z3,
        2,
        vec![AffineForm::linear(vec![1, 1]), AffineForm::linear(vec![1, 0]), AffineForm::linear(vec![0, 1])],
    )
    .map_err(|e| e.to_string())?;
    let g = LinearFormsGame::new(sys, vec![0, 1, 1]).map_err(|e| e.to_string())?;
    let (xor, scale) = g.to_mod_game().map_err(|e| e.to_string())?.ok_or("empty game")?;
    ensure(scale.is_one(), || format!("scale {scale}"))?;
    let sq = xor_parallel_repetition(&xor, 2, RepetitionMode::And).map_err(|e| e.to_string())?;
    let omega2 = classical_value(&sq).map_err(|e| e.to_string())?.omega;
    let bound = parallel_repetition_bound(&g, 2).map_err(|e| e.to_string())?;
    ensure(to_f64(&omega2) <= bound + 1e-12, || format!("omega(G^2) {omega2} > bound {bound}"))?;
    Ok(format!(
        "product lemma max err {worst:.1e}; magic square beta {} <= U^3 {:.6}; Z_3 omega(G^2) {omega2} <= {bound:.6}",
        vn.beta, vn.u_norm
    ))
}

fn splitting() -> Check {
    let mut count = 0;
    for c0 in 0..5i64 {
        for c1 in 0..5i64 {
            for c2 in 0..5i64 {
                let poly = FpPolynomial::new(5, 1, [(vec![0], c0), (vec![1], c1), (vec![2], c2)]).unwrap();
                let qs = polynomial_split(&poly, 3).map_err(|e| e.to_string())?;
                ensure(verify_split(&poly, &qs, DEFAULT_BUDGET).map_err(|e| e.to_string())?, || format!("{poly}"))?;
                count += 1;
            }
        }
    }
    let mut rng = seeded(5);
    let monomials = [vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
    for _ in 0..100 {
        let terms: Vec<(Vec<u32>, i64)> = monomials.iter().map(|e| (e.clone(), rng.gen_range(0..5))).collect();
        let poly = FpPolynomial::new(5, 2, terms).unwrap();
        let qs = polynomial_split(&poly, 3).map_err(|e| e.to_string())?;
        ensure(verify_split(&poly, &qs, DEFAULT_BUDGET).map_err(|e| e.to_string())?, || format!("{poly}"))?;
        count += 1;
    }
    Ok(format!("{count} polynomials split and verified"))
}

fn complex_rounding() -> Check {
    let zs = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::from_polar(1.0, std::f64::consts::PI / 7.0)];
    let mut notes = Vec::new();
    for (i, z) in zs.into_iter().enumerate() {
        let (est, se_re, se_im) = rounding_identity_estimate(z, 300 + i as u64, 1_000_000);
        let (zr, zi) = ((est.re - z.re) / se_re, (est.im - z.im) / se_im);
        ensure(zr.abs() <= 3.0 && zi.abs() <= 3.0, || format!("z={z}: estimate {est}, z-scores {zr:.2} {zi:.2}"))?;
        notes.push(format!("({zr:+.2},{zi:+.2})"));
    }
    Ok(format!("z-scores {}", notes.join(" ")))
}

fn sdp_suite() -> Check {
    for (k, nx, ny) in [(2, 2, 2), (3, 3, 2), (4, 2, 3)] {
        let g = UniqueGame::identity(k, nx, ny).map_err(|e| e.to_string())?;
        let sol = solve_sdp(&g, &SdpOptions::default()).map_err(|e| e.to_string())?.solution;
        ensure((sol.objective - 1.0).abs() <= 1e-6, || format!("identity k={k}: objective {}", sol.objective))?;
        for seed in 0..10 {
            let r = round(&sol, &g, seed).map_err(|e| e.to_string())?;
            ensure(r.win.is_one(), || format!("identity k={k} seed {seed}: won {}", r.win))?;
        }
    }
    let chsh = UniqueGame::chsh();
    let sol = solve_sdp(&chsh, &SdpOptions::default()).map_err(|e| e.to_string())?.solution;
    ensure(sol.objective >= 0.8535, || format!("CHSH objective {}", sol.objective))?;
    for seed in 0..100 {
        let w = to_f64(&round(&sol, &chsh, seed).map_err(|e| e.to_string())?.win);
        ensure(w <= 0.75 + 1e-9, || format!("seed {seed}: rounded CHSH value {w}"))?;
    }
    let inst = PlantedInstance::new(4, 4, 4, 17).map_err(|e| e.to_string())?;
    for eps in [1.0 / 128.0, 1.0 / 512.0] {
        let sol = perturb_planted(&inst, eps, 3).map_err(|e| e.to_string())?;
        let d = diagnostics(&sol, &inst.game, 4, 2000).map_err(|e| e.to_string())?;
        for p in &d.pairs {
            ensure(p.within_bounds(3.0), || format!("eps={eps}: pair ({}, {}) {p:?}", p.x, p.y))?;
        }
    }
    let study = perturbation_study(4, &[0.04, 0.01, 0.0025, 0.0], 64, 8).map_err(|e| e.to_string())?;
    let losses: Vec<f64> = study.rows.iter().map(|r| r.mean_loss).collect();
    ensure(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12) && losses[3] == 0.0, || format!("losses {losses:?}"))?;
    Ok(format!("CHSH objective {:.6}; study losses {:?}", sol.objective, losses))
}

fn cleve_slofstra() -> Check {
    let g = mermin_game();
    let mut rng = seeded(11);
    for k in 1..=2usize {
        let rep = xor_parallel_repetition(&g, k, RepetitionMode::And).map_err(|e| e.to_string())?;
        for i in 0..100 {
            let s = DeterministicStrategy {
                answers: (0..3).map(|j| (0..rep.question_count(j)).map(|_| rng.gen_range(0..1u32 << k)).collect()).collect(),
            };
            let (lhs, rhs) = cleve_slofstra_check(&g, &s, k).map_err(|e| e.to_string())?;
            ensure(lhs == rhs, || format!("k={k} strategy {i}: {lhs} vs {rhs}"))?;
            ensure(lhs == evaluate_strategy(&rep, &s).map_err(|e| e.to_string())?, || "inconsistent".into())?;
        }
    }
    Ok("200 strategies exact".into())
}

fn operator_cs() -> Check {
    let mut rng = seeded(12);
    let mut slack = f64::INFINITY;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=4);
        let mut mat = || CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let a: Vec<CMatrix> = (0..k).map(|_| mat()).collect();
        let b: Vec<CMatrix> = (0..k).map(|_| mat()).collect();
        let (l, r) = operator_cs_check(&a, &b).map_err(|e| e.to_string())?;
        ensure(l <= r + 1e-9, || format!("d={d} k={k}: {l} > {r}"))?;
        slack = slack.min(r - l);
    }
    Ok(format!("1000 instances, min slack {slack:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("1 semi-trivial lower bounds", table_lower_bounds),
        ("2 Boyer upper bounds", table_upper_bounds),
        ("3 Mermin and GHZ", mermin),
        ("4 conditional profiles", profile_shapes),
        ("5 floor strategy", floor_trials),
        ("6 hypergraph norms", hypergraph_suite),
        ("7 Gowers norms", gowers_suite),
        ("8 polynomial splitting", splitting),
        ("9 complex rounding", complex_rounding),
        ("10 unique-game SDP", sdp_suite),
        ("11 AND/XOR repetition identity", cleve_slofstra),
        ("12 operator Cauchy-Schwarz", operator_cs),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {name} ({secs:.1} s): {msg}"),
            Err(msg) => {
                println!("FAIL {name} ({secs:.1} s): {msg}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
