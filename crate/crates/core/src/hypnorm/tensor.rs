use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{build_ht, Hypergraph};
use crate::error::{Error, Result};
use crate::game::{product_indices, ModMGame};
use crate::rational::{rational_from_json, scale_to_u64, to_f64, Rational};

/// Default cap on the number of enumerated map tuples.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// `+-1` tensor of a free XOR game with its product input distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTensor {
    dims: Vec<usize>,
    /// Row-major, player 0 most significant.
    entries: Vec<i8>,
    marginals: Vec<Vec<Rational>>,
}

impl GameTensor {
    pub fn new(dims: Vec<usize>, entries: Vec<i8>, marginals: Vec<Vec<Rational>>) -> Result<Self> {
        let size = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if dims.is_empty() || dims.contains(&0) || size != Some(entries.len()) {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match {} entries",
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidParameter("tensor entries must be +1 or -1".into()));
        }
        if marginals.len() != dims.len() || marginals.iter().zip(&dims).any(|(p, &d)| p.len() != d) {
            return Err(Error::DimensionMismatch("one marginal entry per question is required".into()));
        }
        for (i, p) in marginals.iter().enumerate() {
            if p.iter().any(|x| x.is_negative()) || !p.iter().sum::<Rational>().is_one() {
                return Err(Error::InvalidParameter(format!("marginal {i} is not a probability vector")));
            }
        }
        Ok(Self { dims, entries, marginals })
    }

    pub fn uniform(dims: Vec<usize>, entries: Vec<i8>) -> Result<Self> {
        let marginals = dims
            .iter()
            .map(|&d| vec![Rational::new(BigInt::one(), BigInt::from(d.max(1))); d])
            .collect();
        Self::new(dims, entries, marginals)
    }

    /// Tensor of a free XOR game; the input distribution must be the
    /// product of its marginals.
    pub fn from_game(game: &ModMGame) -> Result<Self> {
        if !game.is_xor() {
            return Err(Error::Unsupported("game tensors need an XOR game".into()));
        }
        let t = game.players();
        let dims: Vec<usize> = (0..t).map(|j| game.question_count(j)).collect();
        let mut marginals: Vec<Vec<Rational>> = dims.iter().map(|&d| vec![Rational::zero(); d]).collect();
        let mut weight = vec![Rational::zero(); dims.iter().product()];
        let mut entries = vec![1i8; weight.len()];
        let strides = strides(&dims);
        for e in game.support() {
            let idx: usize = e.x.iter().zip(&strides).map(|(q, s)| q * s).sum();
            weight[idx] = e.weight.clone();
            entries[idx] = if e.target == 0 { 1 } else { -1 };
            for (j, &q) in e.x.iter().enumerate() {
                marginals[j][q] += &e.weight;
            }
        }
        for (idx, x) in product_indices(&dims).into_iter().enumerate() {
            let prod: Rational = x.iter().enumerate().map(|(j, &q)| marginals[j][q].clone()).product();
            if prod != weight[idx] {
                return Err(Error::Unsupported("input distribution is not a product distribution".into()));
            }
        }
        Self::new(dims, entries, marginals)
    }

    /// XOR game with target 1 where the tensor is -1; zero-probability
    /// inputs are left out.
    pub fn to_game(&self) -> Result<ModMGame> {
        let questions = self.dims.iter().map(|&d| (0..d).map(|q| q.to_string()).collect()).collect();
        let support = product_indices(&self.dims)
            .into_iter()
            .enumerate()
            .filter_map(|(idx, x)| {
                let w: Rational = x.iter().enumerate().map(|(j, &q)| self.marginals[j][q].clone()).product();
                (!w.is_zero()).then(|| crate::game::SupportEntry {
                    x,
                    weight: w,
                    target: if self.entries[idx] == 1 { 0 } else { 1 },
                })
            })
            .collect();
        ModMGame::new(2, questions, support)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn marginals(&self) -> &[Vec<Rational>] {
        &self.marginals
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn at(&self, x: &[usize]) -> i8 {
        let mut idx = 0;
        for (q, d) in x.iter().zip(&self.dims) {
            idx = idx * d + q;
        }
        self.entries[idx]
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Marginals as integers over per-player common denominators.
fn integer_marginals(t: &GameTensor) -> Option<(Vec<Vec<u64>>, Vec<BigInt>)> {
    let mut ws = Vec::new();
    let mut dens = Vec::new();
    for p in &t.marginals {
        let (w, l) = scale_to_u64(p)?;
        ws.push(w);
        dens.push(l);
    }
    Some((ws, dens))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormValue {
    /// `E prod_e T(phi(e))` exactly, when the marginals allow integer sums.
    pub expectation_exact: Option<Rational>,
    pub expectation: f64,
    /// `|expectation|^(1/|E|)`.
    pub norm: f64,
}

pub fn hypergraph_norm(t: &GameTensor, h: &Hypergraph) -> Result<NormValue> {
    hypergraph_norm_with(t, h, DEFAULT_BUDGET)
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, o: KahanSum) {
        self.add(o.sum);
        self.add(o.c);
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `|E prod over edges of T(phi_1(v_1), ..., phi_t(v_t))|^(1/|E|)` where each
/// `phi_i` maps the vertices of part `i` to questions, vertex images drawn
/// independently from the player's marginal.
pub fn hypergraph_norm_with(tensor: &GameTensor, h: &Hypergraph, budget: u128) -> Result<NormValue> {
    let t = tensor.players();
    if h.t() != t {
        return Err(Error::DimensionMismatch(format!("hypergraph has {} parts, tensor {t} players", h.t())));
    }
    // flattened vertices: (part, index)
    let verts: Vec<(usize, usize)> = (0..t).flat_map(|i| (0..h.parts[i].len()).map(move |v| (i, v))).collect();
    let offset: Vec<usize> = (0..t).map(|i| h.parts[..i].iter().map(|p| p.len()).sum()).collect();
    let terms = verts
        .iter()
        .try_fold(1u128, |acc, &(i, _)| acc.checked_mul(tensor.dims[i] as u128))
        .unwrap_or(u128::MAX);
    if terms > budget {
        return Err(Error::BudgetExceeded { needed: terms, budget });
    }
    let edges: Vec<Vec<usize>> =
        h.edges.iter().map(|e| e.iter().enumerate().map(|(i, &v)| offset[i] + v).collect()).collect();
    let strides = strides(&tensor.dims);
    let ints = integer_marginals(tensor);
    // exact path when the largest possible sum fits comfortably in an i128
    let exact = ints.as_ref().and_then(|(_, dens)| {
        let mut bits = (terms as f64).log2();
        for &(i, _) in &verts {
            bits += dens[i].bits() as f64;
        }
        (bits < 120.0).then_some(())
    });
    let probs: Vec<Vec<f64>> = tensor.marginals.iter().map(|p| p.iter().map(to_f64).collect()).collect();
    let n = verts.len();
    let first_dim = tensor.dims[verts[0].0];

    let chunk = |first: usize| -> (i128, KahanSum) {
        let mut vals = vec![0usize; n];
        vals[0] = first;
        let mut exact_sum = 0i128;
        let mut float_sum = KahanSum::default();
        loop {
            let mut sign = 1i8;
            for e in &edges {
                let idx: usize = e.iter().zip(&strides).map(|(&v, s)| vals[v] * s).sum();
                sign *= tensor.entries[idx];
            }
            if exact.is_some() {
                let (w, _) = ints.as_ref().unwrap();
                let mut weight: i128 = 1;
                for (k, &(i, _)) in verts.iter().enumerate() {
                    weight *= w[i][vals[k]] as i128;
                    if weight == 0 {
                        break;
                    }
                }
                exact_sum += sign as i128 * weight;
            } else {
                let mut weight = 1.0;
                for (k, &(i, _)) in verts.iter().enumerate() {
                    weight *= probs[i][vals[k]];
                }
                float_sum.add(sign as f64 * weight);
            }
            // odometer over positions 1..n
            let mut k = n;
            loop {
                if k == 1 {
                    return (exact_sum, float_sum);
                }
                k -= 1;
                vals[k] += 1;
                if vals[k] < tensor.dims[verts[k].0] {
                    break;
                }
                vals[k] = 0;
            }
        }
    };
    let parts: Vec<(i128, KahanSum)> = (0..first_dim).into_par_iter().map(chunk).collect();
    if exact.is_some() {
        let (_, dens) = ints.as_ref().unwrap();
        let total: i128 = parts.iter().map(|p| p.0).sum();
        let den: BigInt = verts.iter().map(|&(i, _)| dens[i].clone()).product();
        let e = Rational::new(BigInt::from(total), den);
        let f = to_f64(&e);
        Ok(NormValue { norm: f.abs().powf(1.0 / h.edges.len() as f64), expectation: f, expectation_exact: Some(e) })
    } else {
        let mut s = KahanSum::default();
        for p in parts {
            s.merge(p.1);
        }
        let f = s.value();
        Ok(NormValue { norm: f.abs().powf(1.0 / h.edges.len() as f64), expectation: f, expectation_exact: None })
    }
}

/// `|E_x T(x) prod_i a_i(x_i)|` for `+-1` answers, exactly.
pub fn strategy_bias(tensor: &GameTensor, answers: &[Vec<i8>]) -> Result<Rational> {
    let t = tensor.players();
    if answers.len() != t || answers.iter().zip(&tensor.dims).any(|(a, &d)| a.len() != d) {
        return Err(Error::DimensionMismatch("one answer per question is required".into()));
    }
    let (w, dens) = integer_marginals(tensor)
        .ok_or_else(|| Error::Unsupported("marginal denominators too large for exact sums".into()))?;
    let mut total = BigInt::zero();
    let mut acc: i128 = 0;
    for (idx, x) in product_indices(&tensor.dims).into_iter().enumerate() {
        let mut weight: i128 = tensor.entries[idx] as i128;
        let mut overflow = false;
        for (j, &q) in x.iter().enumerate() {
            match weight.checked_mul(w[j][q] as i128 * answers[j][q] as i128) {
                Some(v) => weight = v,
                None => {
                    overflow = true;
                    break;
                }
            }
        }
        if overflow {
            let mut big = BigInt::from(tensor.entries[idx]);
            for (j, &q) in x.iter().enumerate() {
                big *= BigInt::from(w[j][q]) * BigInt::from(answers[j][q]);
            }
            total += big;
            continue;
        }
        match acc.checked_add(weight) {
            Some(v) => acc = v,
            None => {
                total += BigInt::from(acc);
                acc = weight;
            }
        }
    }
    total += BigInt::from(acc);
    let den: BigInt = dens.iter().product();
    Ok(Rational::new(total, den).abs())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedStrategy {
    /// `answers[i][x]` in `{+1, -1}`.
    pub answers: Vec<Vec<i8>>,
    pub bias: Rational,
}

/// Classical strategy whose bias is at least `||T||_{H(t)}^(2^t)`.
///
/// Fix the first edge `e*` of `H(t)` and, for each part `i`, the other edge
/// `e_i*` through the vertex of `e*` in part `i`. Given images of the
/// vertices of these companion edges (other than the vertices of `e*`),
/// player `i` answers `a_i(x) = T(e_i* with x in position i)`. Every
/// assignment of those vertices is tried and the best strategy kept; the
/// norm bound says the average is already large enough.
pub fn extract_classical_strategy(tensor: &GameTensor, budget: u128) -> Result<ExtractedStrategy> {
    let t = tensor.players();
    let h = build_ht(t)?;
    let star = &h.edges[0];
    let companions: Vec<&Vec<usize>> = (0..t)
        .map(|i| {
            let es = h.edges_at(i, star[i]);
            let other = if es[0] == 0 { es[1] } else { es[0] };
            &h.edges[other]
        })
        .collect();
    // relevant vertices: (part, vertex) on companion edges, outside e*
    let mut relevant: Vec<(usize, usize)> = Vec::new();
    for (i, e) in companions.iter().enumerate() {
        for (j, &v) in e.iter().enumerate() {
            if j != i && !relevant.contains(&(j, v)) {
                relevant.push((j, v));
            }
        }
    }
    let count = relevant
        .iter()
        .try_fold(1u128, |acc, &(j, _)| acc.checked_mul(tensor.dims[j] as u128))
        .unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded { needed: count, budget });
    }
    let n = relevant.len();
    let mut vals = vec![0usize; n];
    let mut best: Option<ExtractedStrategy> = None;
    loop {
        let image = |j: usize, v: usize| -> usize {
            let k = relevant.iter().position(|&r| r == (j, v)).expect("relevant vertex");
            vals[k]
        };
        let answers: Vec<Vec<i8>> = (0..t)
            .map(|i| {
                (0..tensor.dims[i])
                    .map(|x| {
                        let q: Vec<usize> =
                            (0..t).map(|j| if j == i { x } else { image(j, companions[i][j]) }).collect();
                        tensor.at(&q)
                    })
                    .collect()
            })
            .collect();
        let bias = strategy_bias(tensor, &answers)?;
        if best.as_ref().is_none_or(|b| bias > b.bias) {
            best = Some(ExtractedStrategy { answers, bias });
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best.expect("at least one assignment"));
            }
            k -= 1;
            vals[k] += 1;
            if vals[k] < tensor.dims[relevant[k].0] {
                break;
            }
            vals[k] = 0;
        }
    }
}

pub fn tensor_from_json(v: &Value) -> Result<GameTensor> {
    let dims: Vec<usize> = v
        .get("dims")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing \"dims\" array".into()))?
        .iter()
        .map(|d| d.as_u64().map(|d| d as usize).ok_or_else(|| Error::Parse("dims must be integers".into())))
        .collect::<Result<_>>()?;
    let entries: Vec<i8> = v
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing \"entries\" array".into()))?
        .iter()
        .map(|e| match e.as_i64() {
            Some(1) => Ok(1),
            Some(-1) => Ok(-1),
            _ => Err(Error::Parse(format!("tensor entries must be +1 or -1, got {e}"))),
        })
        .collect::<Result<_>>()?;
    match v.get("marginals") {
        None | Some(Value::Null) => GameTensor::uniform(dims, entries),
        Some(m) => {
            let marginals = m
                .as_array()
                .ok_or_else(|| Error::Parse("\"marginals\" must be an array".into()))?
                .iter()
                .map(|p| {
                    p.as_array()
                        .ok_or_else(|| Error::Parse("each marginal must be an array".into()))?
                        .iter()
                        .map(rational_from_json)
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            GameTensor::new(dims, entries, marginals)
        }
    }
}

pub fn tensor_to_json(t: &GameTensor) -> Value {
    json!({
        "dims": t.dims,
        "entries": t.entries,
        "marginals": t.marginals.iter().map(|p| p.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

impl ExtractedStrategy {
    pub fn bias_f64(&self) -> f64 {
        self.bias.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::classical_value;
    use crate::rational::{int, rat};
    use crate::rng::seeded;
    use rand::Rng;

    fn chsh() -> GameTensor {
        GameTensor::uniform(vec![2, 2], vec![1, 1, 1, -1]).unwrap()
    }

    fn random_tensor(dims: &[usize], rng: &mut crate::rng::SeededRng) -> GameTensor {
        let n = dims.iter().product();
        let entries = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        GameTensor::uniform(dims.to_vec(), entries).unwrap()
    }

    fn all_strategies(dims: &[usize]) -> Vec<Vec<Vec<i8>>> {
        let slots: usize = dims.iter().sum();
        (0..1u64 << slots)
            .map(|code| {
                let mut bit = 0;
                dims.iter()
                    .map(|&d| {
                        (0..d)
                            .map(|_| {
                                let s = if code >> bit & 1 == 1 { -1 } else { 1 };
                                bit += 1;
                                s
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn chsh_norm() {
        let v = hypergraph_norm(&chsh(), &build_ht(2).unwrap()).unwrap();
        assert_eq!(v.expectation_exact, Some(rat(1, 2)));
        assert!((v.norm - 2f64.powf(-0.25)).abs() < 1e-12);
        let e = extract_classical_strategy(&chsh(), DEFAULT_BUDGET).unwrap();
        assert_eq!(e.bias, rat(1, 2));
        let game = chsh().to_game().unwrap();
        assert_eq!(int(2) * classical_value(&game).unwrap().omega - int(1), rat(1, 2));
    }

    #[test]
    fn constant_and_rank_one_tensors() {
        let ones = GameTensor::uniform(vec![2, 3, 2], vec![1; 12]).unwrap();
        let h3 = build_ht(3).unwrap();
        assert_eq!(hypergraph_norm(&ones, &h3).unwrap().expectation_exact, Some(int(1)));
        assert_eq!(extract_classical_strategy(&ones, DEFAULT_BUDGET).unwrap().bias, int(1));

        let (a, b, c) = ([1i8, -1], [-1i8, -1, 1], [1i8, -1]);
        let mut entries = Vec::new();
        for x in a {
            for y in b {
                for z in c {
                    entries.push(x * y * z);
                }
            }
        }
        let r1 = GameTensor::uniform(vec![2, 3, 2], entries).unwrap();
        assert_eq!(hypergraph_norm(&r1, &h3).unwrap().expectation_exact, Some(int(1)));
        assert_eq!(extract_classical_strategy(&r1, DEFAULT_BUDGET).unwrap().bias, int(1));
    }

    #[test]
    fn norm_bounds_classical_biases_and_extraction_meets_it() {
        let mut rng = seeded(21);
        let h = build_ht(3).unwrap();
        let strategies = all_strategies(&[2, 2, 2]);
        for _ in 0..20 {
            let tensor = random_tensor(&[2, 2, 2], &mut rng);
            let nv = hypergraph_norm(&tensor, &h).unwrap();
            for s in &strategies {
                assert!(to_f64(&strategy_bias(&tensor, s).unwrap()) <= nv.norm + 1e-9);
            }
            let e = extract_classical_strategy(&tensor, DEFAULT_BUDGET).unwrap();
            assert!(e.bias >= nv.expectation_exact.clone().unwrap().abs());
        }
    }

    #[test]
    fn weighted_marginals() {
        let t = GameTensor::new(
            vec![2, 2],
            vec![1, 1, 1, -1],
            vec![vec![rat(1, 3), rat(2, 3)], vec![rat(1, 4), rat(3, 4)]],
        )
        .unwrap();
        let game = t.to_game().unwrap();
        assert_eq!(GameTensor::from_game(&game).unwrap(), t);
        let nv = hypergraph_norm(&t, &build_ht(2).unwrap()).unwrap();
        // brute-force oracle over the 16 assignments of the 4-cycle
        let p = [[1.0 / 3.0, 2.0 / 3.0], [0.25, 0.75]];
        let mut sum = 0.0;
        for x0 in 0..2 {
            for x1 in 0..2 {
                for y0 in 0..2 {
                    for y1 in 0..2 {
                        let w = p[0][x0] * p[0][x1] * p[1][y0] * p[1][y1];
                        let s = (t.at(&[x0, y0]) * t.at(&[x1, y0]) * t.at(&[x0, y1]) * t.at(&[x1, y1])) as f64;
                        sum += w * s;
                    }
                }
            }
        }
        assert!((nv.expectation - sum).abs() < 1e-15);
        let e = extract_classical_strategy(&t, DEFAULT_BUDGET).unwrap();
        assert!(to_f64(&e.bias) >= nv.expectation.abs() - 1e-12);
    }

    #[test]
    fn rejects_bad_tensors() {
        assert!(GameTensor::uniform(vec![2, 2], vec![1, 1, 0, 1]).is_err());
        assert!(GameTensor::uniform(vec![2, 2], vec![1, 1, 1]).is_err());
        assert!(GameTensor::new(vec![2], vec![1, 1], vec![vec![rat(1, 2), rat(1, 3)]]).is_err());
        let err = hypergraph_norm_with(&chsh(), &build_ht(2).unwrap(), 4).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { needed: 16, .. }));
    }

    #[test]
    fn json_round_trip() {
        let t = chsh();
        assert_eq!(tensor_from_json(&tensor_to_json(&t)).unwrap(), t);
        let v: Value = serde_json::from_str(r#"{"dims":[2,2],"entries":[1,1,1,-1]}"#).unwrap();
        assert_eq!(tensor_from_json(&v).unwrap(), t);
    }
}
