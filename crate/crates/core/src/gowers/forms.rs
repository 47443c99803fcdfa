use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde_json::Value;

use super::{gowers_norm, gowers_norm_with, is_prime, FiniteAbelianGroup, GroupFunction, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::game::{classical_value_with, search_size, ModMGame, SearchOptions, SupportEntry};
use crate::rational::{int, Rational};

/// `psi(g) = c + sum_j c_j g_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    /// Group element index.
    pub constant: usize,
    pub coeffs: Vec<i64>,
}

impl AffineForm {
    pub fn linear(coeffs: Vec<i64>) -> Self {
        Self { constant: 0, coeffs }
    }
}

/// Forms `psi_0, ..., psi_t` from `Gamma^m` to `Gamma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormsSystem {
    group: FiniteAbelianGroup,
    vars: usize,
    forms: Vec<AffineForm>,
}

impl LinearFormsSystem {
    /// Coefficients are reduced into `[0, exponent)`.
    pub fn new(group: FiniteAbelianGroup, vars: usize, mut forms: Vec<AffineForm>) -> Result<Self> {
        if forms.len() < 2 {
            return Err(Error::InvalidParameter("a system needs at least two forms".into()));
        }
        let e = group.exponent() as i64;
        for f in &mut forms {
            if f.coeffs.len() != vars {
                return Err(Error::DimensionMismatch(format!(
                    "form has {} coefficients for {vars} variables",
                    f.coeffs.len()
                )));
            }
            if f.constant >= group.order() {
                return Err(Error::InvalidParameter(format!("constant {} is not a group element", f.constant)));
            }
            for c in &mut f.coeffs {
                *c = c.rem_euclid(e);
            }
        }
        Ok(Self { group, vars, forms })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn forms(&self) -> &[AffineForm] {
        &self.forms
    }

    pub fn eval(&self, i: usize, g: &[usize]) -> usize {
        let f = &self.forms[i];
        g.iter()
            .zip(&f.coeffs)
            .fold(f.constant, |acc, (&x, &c)| self.group.add(acc, self.group.scale(c, x)))
    }

    /// All form values over `Gamma^m` in row-major order of `g`.
    pub fn rows(&self) -> Vec<Vec<u32>> {
        let n = self.group.order();
        let dims = vec![n; self.vars];
        crate::game::product_indices(&dims)
            .into_iter()
            .map(|g| (0..self.forms.len()).map(|i| self.eval(i, &g) as u32).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsComplexity {
    Finite(usize),
    /// No partition found for any `s <= s_max`.
    Unbounded(usize),
}

impl std::fmt::Display for CsComplexity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsComplexity::Finite(s) => write!(f, "{s}"),
            CsComplexity::Unbounded(s) => write!(f, "infinite up to {s}"),
        }
    }
}

fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                for k in c..cols {
                    let d = &f * &m[r][k];
                    m[i][k] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

fn in_span(v: &[Rational], class: &[Vec<Rational>]) -> bool {
    if class.is_empty() {
        return v.iter().all(Zero::is_zero);
    }
    let mut with = class.to_vec();
    with.push(v.to_vec());
    rank(&with) == rank(class)
}

/// Least `s <= s_max` such that for every form the others split into
/// `s + 1` classes none of whose rational spans contains it. Spans are
/// taken over the coefficient vectors; constant terms only translate.
pub fn cs_complexity(sys: &LinearFormsSystem, s_max: usize) -> CsComplexity {
    let vecs: Vec<Vec<Rational>> =
        sys.forms.iter().map(|f| f.coeffs.iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect()).collect();
    let n = vecs.len();
    'outer: for s in 0..=s_max {
        let classes = s + 1;
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let total = classes.checked_pow(others.len() as u32).unwrap_or(usize::MAX);
            let ok = (0..total).any(|mut code| {
                let mut groups: Vec<Vec<Vec<Rational>>> = vec![Vec::new(); classes];
                for &j in &others {
                    groups[code % classes].push(vecs[j].clone());
                    code /= classes;
                }
                groups.iter().all(|g| !in_span(&vecs[i], g))
            });
            if !ok {
                continue 'outer;
            }
        }
        return CsComplexity::Finite(s);
    }
    CsComplexity::Unbounded(s_max)
}

/// Referee samples `g` uniformly from `Gamma^m`, sends `psi_i(g)` to player
/// `i` (forms 1..=t) and scores with `(-1)^rho(psi_0(g))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormsGame {
    system: LinearFormsSystem,
    rho: Vec<u8>,
}

impl LinearFormsGame {
    pub fn new(system: LinearFormsSystem, rho: Vec<u8>) -> Result<Self> {
        if rho.len() != system.group.order() || rho.iter().any(|&r| r > 1) {
            return Err(Error::InvalidParameter(format!(
                "predicate needs {} values in {{0, 1}}",
                system.group.order()
            )));
        }
        Ok(Self { system, rho })
    }

    pub fn system(&self) -> &LinearFormsSystem {
        &self.system
    }

    pub fn rho(&self) -> &[u8] {
        &self.rho
    }

    pub fn players(&self) -> usize {
        self.system.forms.len() - 1
    }

    /// `(-1)^rho`.
    pub fn sign_function(&self) -> GroupFunction {
        GroupFunction::sign_of(self.system.group.clone(), &self.rho).expect("predicate matches group")
    }

    /// Summed sign `sum_g (-1)^rho(psi_0(g))` per question tuple.
    fn signed_counts(&self) -> BTreeMap<Vec<usize>, i64> {
        let mut out = BTreeMap::new();
        for row in self.system.rows() {
            let s = if self.rho[row[0] as usize] == 0 { 1 } else { -1 };
            *out.entry(row[1..].iter().map(|&q| q as usize).collect()).or_insert(0) += s;
        }
        out
    }

    /// Equivalent XOR game together with the factor `c` such that the
    /// linear-forms bias of any strategy is `c` times its XOR-game bias.
    /// Question tuples whose sign averages to zero are dropped; `None`
    /// when nothing remains.
    pub fn to_mod_game(&self) -> Result<Option<(ModMGame, Rational)>> {
        let counts = self.signed_counts();
        let mass: i64 = counts.values().map(|c| c.abs()).sum();
        if mass == 0 {
            return Ok(None);
        }
        let n = self.system.group.order();
        let labels: Vec<String> = (0..n).map(|q| q.to_string()).collect();
        let support = counts
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(x, c)| SupportEntry { x, weight: Rational::new(c.abs().into(), mass.into()), target: u32::from(c < 0) })
            .collect();
        let game = ModMGame::new(2, vec![labels; self.players()], support)?;
        let rows = (n as i64).pow(self.system.vars as u32);
        Ok(Some((game, Rational::new(mass.into(), rows.into()))))
    }
}

/// `|E_g (-1)^rho(psi_0(g)) prod_i a_i(psi_i(g))|` for `+-1` strategies.
pub fn linear_forms_strategy_bias(game: &LinearFormsGame, a: &[Vec<i8>]) -> Result<Rational> {
    let n = game.system.group.order();
    if a.len() != game.players() || a.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch("one answer per player and group element is required".into()));
    }
    let rows = game.system.rows();
    let sum: i64 = rows
        .iter()
        .map(|row| {
            let mut v: i64 = if game.rho[row[0] as usize] == 0 { 1 } else { -1 };
            for (i, &q) in row[1..].iter().enumerate() {
                v *= a[i][q as usize] as i64;
            }
            v
        })
        .sum();
    Ok(Rational::new(sum.abs().into(), (rows.len() as i64).into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormsBias {
    pub bias: Rational,
    /// `strategies[i][g]` in `{+1, -1}` for players `1..=t`.
    pub strategies: Vec<Vec<i8>>,
    /// False when the budget forced a local search; `bias` is then a lower bound.
    pub exact: bool,
}

/// Exact classical bias via the game-core solver; over budget, a
/// best-response ascent from the constant strategy gives a lower bound.
pub fn linear_forms_bias(game: &LinearFormsGame, budget: u128) -> Result<LinearFormsBias> {
    let n = game.system.group.order();
    let t = game.players();
    let Some((mg, scale)) = game.to_mod_game()? else {
        return Ok(LinearFormsBias { bias: Rational::zero(), strategies: vec![vec![1; n]; t], exact: true });
    };
    if search_size(&mg) <= budget {
        let report = classical_value_with(&mg, &SearchOptions { budget })?;
        let strategies: Vec<Vec<i8>> = report
            .witness
            .answers
            .iter()
            .map(|s| s.iter().map(|&a| if a == 0 { 1 } else { -1 }).collect())
            .collect();
        let bias = (int(2) * report.omega - int(1)) * scale;
        return Ok(LinearFormsBias { bias, strategies, exact: true });
    }
    let strategies = best_response_ascent(game);
    let bias = linear_forms_strategy_bias(game, &strategies)?;
    Ok(LinearFormsBias { bias, strategies, exact: false })
}

fn best_response_ascent(game: &LinearFormsGame) -> Vec<Vec<i8>> {
    let n = game.system.group.order();
    let t = game.players();
    let rows = game.system.rows();
    let mut a = vec![vec![1i8; n]; t];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..t {
            let mut score = vec![0i64; n];
            for row in &rows {
                let mut v: i64 = if game.rho[row[0] as usize] == 0 { 1 } else { -1 };
                for (j, &q) in row[1..].iter().enumerate() {
                    if j != i {
                        v *= a[j][q as usize] as i64;
                    }
                }
                score[row[i + 1] as usize] += v;
            }
            for q in 0..n {
                let best = if score[q] >= 0 { 1 } else { -1 };
                if score[q] != 0 && a[i][q] != best {
                    a[i][q] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    a
}

/// Line game on `F_p^n`: `psi_0(x, y) = y`, `psi_i(x, y) = x + (i - 1) y`.
pub fn line_game(t: usize, p: u64, n: usize, tau: Vec<u8>) -> Result<LinearFormsGame> {
    if t < 1 || n < 1 {
        return Err(Error::InvalidParameter("line games need t >= 1 and n >= 1".into()));
    }
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    if p < t as u64 {
        return Err(Error::Characteristic { p, required: t as u64 });
    }
    let group = FiniteAbelianGroup::vector_space(p, n)?;
    let mut forms = vec![AffineForm::linear(vec![0, 1])];
    forms.extend((1..=t).map(|i| AffineForm::linear(vec![1, i as i64 - 1])));
    LinearFormsGame::new(LinearFormsSystem::new(group, 2, forms)?, tau)
}

/// Predicate on `F_3^2` that vanishes exactly on the nonzero horizontal
/// directions `(1, 0)` and `(2, 0)`.
pub fn modified_magic_square_tau() -> Vec<u8> {
    let g = FiniteAbelianGroup::vector_space(3, 2).expect("F_3^2");
    (0..9)
        .map(|i| {
            let c = g.coords(i);
            u8::from(!(c[1] == 0 && c[0] != 0))
        })
        .collect()
}

/// Accepts `[0, 1, ...]`, `{"tau": [...]}` or `{"values": [...]}`.
pub fn predicate_from_json(v: &Value) -> Result<Vec<u8>> {
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("tau")
            .or_else(|| o.get("values"))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("predicate object needs a \"tau\" array".into()))?,
        _ => return Err(Error::Parse("predicate must be an array of 0/1".into())),
    };
    arr.iter()
        .map(|x| match x.as_u64() {
            Some(b @ (0 | 1)) => Ok(b as u8),
            _ => Err(Error::Parse(format!("predicate values must be 0 or 1, got {x}"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VonNeumannReport {
    pub beta: Rational,
    pub exact: bool,
    pub s: usize,
    /// `||(-1)^rho||_{U^{s+1}}`.
    pub u_norm: f64,
    pub holds: bool,
}

/// Classical bias against the uniformity norm of order one more than the
/// system's complexity.
pub fn von_neumann_check(game: &LinearFormsGame, budget: u128) -> Result<VonNeumannReport> {
    let s = match cs_complexity(&game.system, 4) {
        CsComplexity::Finite(s) => s,
        CsComplexity::Unbounded(_) => {
            return Err(Error::Unsupported("system has complexity above 4".into()));
        }
    };
    let b = linear_forms_bias(game, budget)?;
    let u_norm = gowers_norm_with(&game.sign_function(), s as u32 + 1, budget)?;
    let holds = crate::rational::to_f64(&b.bias) <= u_norm + 1e-9;
    Ok(VonNeumannReport { beta: b.bias, exact: b.exact, s, u_norm, holds })
}

/// `((1 + ||(-1)^rho||_{U^{s+1}}) / 2)^k`, bounding the value of the
/// `k`-fold repetition.
pub fn parallel_repetition_bound(game: &LinearFormsGame, k: u32) -> Result<f64> {
    let s = match cs_complexity(&game.system, 4) {
        CsComplexity::Finite(s) => s,
        CsComplexity::Unbounded(_) => {
            return Err(Error::Unsupported("system has complexity above 4".into()));
        }
    };
    let u = gowers_norm(&game.sign_function(), s as u32 + 1)?;
    Ok(((1.0 + u) / 2.0).powi(k as i32))
}

/// `(||f^k||_{U^{s+1}(Gamma^k)}, ||f||_{U^{s+1}(Gamma)}^k)`.
pub fn gowers_product_check(f: &GroupFunction, k: usize, s: u32) -> Result<(f64, f64)> {
    let fk = f.tensor_power(k)?;
    let lhs = gowers_norm_with(&fk, s + 1, DEFAULT_BUDGET * 10)?;
    let rhs = gowers_norm(f, s + 1)?.powi(k as i32);
    Ok((lhs, rhs))
}

impl LinearFormsBias {
    pub fn is_positive(&self) -> bool {
        self.bias.is_positive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{classical_value, xor_parallel_repetition, RepetitionMode};
    use crate::rational::to_f64;
    use crate::rng::seeded;
    use rand::Rng;

    fn zp(p: u64) -> FiniteAbelianGroup {
        FiniteAbelianGroup::cyclic(p).unwrap()
    }

    fn sum_system(p: u64) -> LinearFormsSystem {
        let forms = vec![AffineForm::linear(vec![1, 1]), AffineForm::linear(vec![1, 0]), AffineForm::linear(vec![0, 1])];
        LinearFormsSystem::new(zp(p), 2, forms).unwrap()
    }

    fn naive_bias(game: &LinearFormsGame) -> Rational {
        let n = game.system().group().order();
        let t = game.players();
        let mut best = Rational::zero();
        for code in 0..1u64 << (n * t) {
            let a: Vec<Vec<i8>> = (0..t)
                .map(|i| (0..n).map(|q| if code >> (i * n + q) & 1 == 1 { -1 } else { 1 }).collect())
                .collect();
            best = best.max(linear_forms_strategy_bias(game, &a).unwrap());
        }
        best
    }

    #[test]
    fn complexity_examples() {
        let g = FiniteAbelianGroup::vector_space(5, 1).unwrap();
        let line = LinearFormsSystem::new(
            g.clone(),
            2,
            vec![
                AffineForm::linear(vec![0, 1]),
                AffineForm::linear(vec![1, 0]),
                AffineForm::linear(vec![1, 1]),
                AffineForm::linear(vec![1, 2]),
            ],
        )
        .unwrap();
        assert!(matches!(cs_complexity(&line, 4), CsComplexity::Finite(s) if s <= 2));
        assert_eq!(cs_complexity(&sum_system(5), 4), CsComplexity::Finite(1));
        let dup = LinearFormsSystem::new(g, 1, vec![AffineForm::linear(vec![1]), AffineForm::linear(vec![1])]).unwrap();
        assert_eq!(cs_complexity(&dup, 4), CsComplexity::Unbounded(4));
        // a shifted copy still lies in the span
        let shifted = LinearFormsSystem::new(
            zp(5),
            1,
            vec![AffineForm { constant: 1, coeffs: vec![1] }, AffineForm::linear(vec![1])],
        )
        .unwrap();
        assert_eq!(cs_complexity(&shifted, 2), CsComplexity::Unbounded(2));
    }

    #[test]
    fn line_game_guards_and_trivial_predicate() {
        assert!(matches!(line_game(3, 2, 1, vec![0; 2]), Err(Error::Characteristic { p: 2, required: 3 })));
        assert!(line_game(2, 4, 1, vec![0; 4]).is_err());
        let g = line_game(3, 3, 2, vec![0; 9]).unwrap();
        let b = linear_forms_bias(&g, DEFAULT_BUDGET).unwrap();
        assert!(b.exact);
        assert_eq!(b.bias, int(1));
        let tau = modified_magic_square_tau();
        assert_eq!(tau.iter().filter(|&&x| x == 0).count(), 2);
        assert_eq!(tau[3], 0);
        assert_eq!(tau[6], 0);
    }

    #[test]
    fn magic_square_line_game_obeys_von_neumann() {
        let g = line_game(3, 3, 2, modified_magic_square_tau()).unwrap();
        let r = von_neumann_check(&g, DEFAULT_BUDGET).unwrap();
        assert!(r.exact);
        assert!(r.s <= 2);
        assert!(r.holds, "{} > {}", r.beta, r.u_norm);
        let witness = linear_forms_bias(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(linear_forms_strategy_bias(&g, &witness.strategies).unwrap(), witness.bias);
        // the local search never beats the exact value
        let ascent = linear_forms_bias(&g, 1).unwrap();
        assert!(!ascent.exact);
        assert!(ascent.bias <= witness.bias);
    }

    #[test]
    fn bias_matches_naive_enumeration() {
        let mut rng = seeded(12);
        for _ in 0..20 {
            let rho: Vec<u8> = (0..3).map(|_| rng.gen_range(0..2)).collect();
            let g = line_game(2, 3, 1, rho).unwrap();
            assert_eq!(linear_forms_bias(&g, DEFAULT_BUDGET).unwrap().bias, naive_bias(&g));
        }
        // questions do not determine the predicate input here
        for _ in 0..20 {
            let rho: Vec<u8> = (0..3).map(|_| rng.gen_range(0..2)).collect();
            let g = line_game(1, 3, 1, rho).unwrap();
            assert_eq!(linear_forms_bias(&g, DEFAULT_BUDGET).unwrap().bias, naive_bias(&g));
        }
    }

    #[test]
    fn random_sum_games_obey_von_neumann() {
        let mut rng = seeded(13);
        for _ in 0..20 {
            let rho: Vec<u8> = (0..5).map(|_| rng.gen_range(0..2)).collect();
            let g = LinearFormsGame::new(sum_system(5), rho).unwrap();
            let r = von_neumann_check(&g, DEFAULT_BUDGET).unwrap();
            assert_eq!(r.s, 1);
            assert!(r.holds);
        }
        let zero = LinearFormsGame::new(sum_system(5), vec![0; 5]).unwrap();
        let r = von_neumann_check(&zero, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.beta, int(1));
        assert!((r.u_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_bound_on_z3() {
        assert_eq!(parallel_repetition_bound(&LinearFormsGame::new(sum_system(3), vec![0; 3]).unwrap(), 3).unwrap(), 1.0);
        for rho in [vec![0, 0, 1], vec![0, 1, 1], vec![1, 0, 0]] {
            let g = LinearFormsGame::new(sum_system(3), rho).unwrap();
            let (mg, scale) = g.to_mod_game().unwrap().unwrap();
            assert_eq!(scale, int(1));
            let g2 = xor_parallel_repetition(&mg, 2, RepetitionMode::And).unwrap();
            let omega2 = to_f64(&classical_value(&g2).unwrap().omega);
            assert!(omega2 <= parallel_repetition_bound(&g, 2).unwrap() + 1e-9);
            let omega1 = classical_value(&mg).unwrap().omega;
            assert!(to_f64(&omega1) <= parallel_repetition_bound(&g, 1).unwrap() + 1e-9);
        }
    }

    #[test]
    fn product_lemma() {
        let mut rng = seeded(14);
        for p in [2u64, 3, 5] {
            let rho: Vec<u8> = (0..p).map(|_| rng.gen_range(0..2)).collect();
            let f = GroupFunction::sign_of(zp(p), &rho).unwrap();
            for s in 0..=2 {
                let (l, r) = gowers_product_check(&f, 2, s).unwrap();
                assert!((l - r).abs() < 1e-9, "p={p} s={s}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn predicate_json_forms() {
        let a: Value = serde_json::from_str("[0,1,1]").unwrap();
        let b: Value = serde_json::from_str(r#"{"tau":[0,1,1]}"#).unwrap();
        assert_eq!(predicate_from_json(&a).unwrap(), vec![0, 1, 1]);
        assert_eq!(predicate_from_json(&b).unwrap(), vec![0, 1, 1]);
        assert!(predicate_from_json(&serde_json::from_str("[2]").unwrap()).is_err());
    }
}
