//! Seeded random streams.
//!
//! Every randomized operation takes an explicit `u64` seed. Parallel workers
//! draw from `stream(seed, worker)`, which selects an independent ChaCha
//! stream, so results depend only on the seed and the partition, never on
//! thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in `[0, 1)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Standard normal by the Box-Muller transform of two uniforms from the
/// stream: `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. One normal per call.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Running mean/variance accumulator (Welford).
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 1).gen()).collect();
        let mut r1 = stream(7, 1);
        let mut r2 = stream(7, 2);
        let x: u64 = r1.gen();
        let y: u64 = r2.gen();
        assert_ne!(x, y);
        assert_eq!(a[0], a[1]);
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut rng = seeded(3);
        let v: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut rng)).collect();
        let (m, _) = mean_and_stderr(&v);
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        assert!(m.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn accumulator_matches_batch() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        for (i, x) in v.iter().enumerate() {
            if i < 37 { a.push(*x) } else { b.push(*x) }
        }
        a.merge(&b);
        let (m, se) = mean_and_stderr(&v);
        assert!((a.mean() - m).abs() < 1e-12);
        assert!((a.stderr() - se).abs() < 1e-12);
    }
}
