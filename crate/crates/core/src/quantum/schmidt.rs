use super::{projective_residual, winning_probability, CMatrix, PureState, QuantumStrategy, TOLERANCE};
use crate::error::{Error, Result};
use crate::game::ModMGame;

/// Strategy on a Schmidt state `sum_i c_i |i>...|i>`, measurements written in
/// the Schmidt basis of each system.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtStrategySpec {
    pub c: Vec<f64>,
    /// `measurements[j][q][a]`, each `d x d`.
    pub measurements: Vec<Vec<Vec<CMatrix>>>,
}

impl SchmidtStrategySpec {
    pub fn new(c: Vec<f64>, measurements: Vec<Vec<Vec<CMatrix>>>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter("Schmidt coefficients must be positive".into()));
        }
        let norm: f64 = c.iter().map(|x| x * x).sum();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidParameter(format!("Schmidt coefficients have squared norm {norm}")));
        }
        let d = c.len();
        for (j, per_q) in measurements.iter().enumerate() {
            for (q, ops) in per_q.iter().enumerate() {
                if ops.iter().any(|p| p.nrows() != d || p.ncols() != d) {
                    return Err(Error::DimensionMismatch(format!(
                        "player {j} question {q}: projectors must be {d}x{d}"
                    )));
                }
                let r = projective_residual(ops);
                if r > TOLERANCE {
                    return Err(Error::NonProjective(format!(
                        "player {j} question {q}: residual {r:e}"
                    )));
                }
            }
        }
        Ok(Self { c, measurements })
    }

    pub fn rank(&self) -> usize {
        self.c.len()
    }

    pub fn players(&self) -> usize {
        self.measurements.len()
    }

    pub fn to_strategy(&self) -> Result<QuantumStrategy> {
        let state = PureState::schmidt(self.players(), &self.c)?;
        QuantumStrategy::new(state, self.measurements.clone())
    }

    /// Schmidt form of a strategy whose state is already `sum_i c_i |i..i>`.
    pub fn from_strategy(s: &QuantumStrategy) -> Result<Self> {
        let dims = s.state.local_dims();
        let d = dims[0];
        if dims.iter().any(|&x| x != d) {
            return Err(Error::DimensionMismatch("all systems must share the Schmidt rank".into()));
        }
        let t = dims.len();
        let stride: usize = (0..t).map(|j| d.pow(j as u32)).sum();
        let amps = s.state.amplitudes();
        let mut c = Vec::with_capacity(d);
        for (k, z) in amps.iter().enumerate() {
            let diag = k % stride == 0 && k / stride < d;
            if diag {
                if z.im.abs() > TOLERANCE || z.re <= 0.0 {
                    return Err(Error::InvalidParameter("state is not in Schmidt form".into()));
                }
                c.push(z.re);
            } else if z.norm() > TOLERANCE {
                return Err(Error::InvalidParameter("state is not in Schmidt form".into()));
            }
        }
        Self::new(c, s.measurements.clone())
    }
}

/// Whether the strategy wins with probability at least `1 - 1e-9`, and the
/// residual `1 - value`.
pub fn verify_schmidt_perfection(game: &ModMGame, spec: &SchmidtStrategySpec) -> Result<(bool, f64)> {
    let value = winning_probability(game, &spec.to_strategy()?)?;
    let residual = 1.0 - value;
    Ok((residual <= TOLERANCE, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::BoyerGame;
    use crate::game::{classical_value, constant_target_game, mermin_game, DeterministicStrategy};
    use crate::quantum::ghz_angle_strategy;

    #[test]
    fn ghz_mermin_is_perfect() {
        let angle = BoyerGame::new(3, 2, 2).unwrap().to_angle();
        let spec = SchmidtStrategySpec::from_strategy(&ghz_angle_strategy(&angle).unwrap()).unwrap();
        let game = angle.to_game();
        let (ok, r) = verify_schmidt_perfection(&game, &spec).unwrap();
        assert!(ok, "residual {r}");
        assert!((spec.c[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        let mut broken = spec.clone();
        broken.measurements[0][1].swap(0, 1);
        let (ok, r) = verify_schmidt_perfection(&game, &broken).unwrap();
        assert!(!ok && r >= 0.1, "residual {r}");
    }

    #[test]
    fn one_dimensional_embedding_is_perfect() {
        let g = constant_target_game(3, &[2, 2]).unwrap();
        let s = DeterministicStrategy::constant(&g, 0);
        let q = crate::quantum::QuantumStrategy::from_deterministic(&g, &s).unwrap();
        let spec = SchmidtStrategySpec::from_strategy(&q).unwrap();
        assert_eq!(spec.rank(), 1);
        assert!(verify_schmidt_perfection(&g, &spec).unwrap().0);
        let m = mermin_game();
        let w = classical_value(&m).unwrap().witness;
        let q = crate::quantum::QuantumStrategy::from_deterministic(&m, &w).unwrap();
        let (ok, r) = verify_schmidt_perfection(&m, &SchmidtStrategySpec::from_strategy(&q).unwrap()).unwrap();
        assert!(!ok && (r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(SchmidtStrategySpec::new(vec![0.5, 0.5], vec![]).is_err());
        assert!(SchmidtStrategySpec::new(vec![1.0, 0.0], vec![]).is_err());
    }
}
