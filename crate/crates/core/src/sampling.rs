//! Seeded uniform samples from a Euclidean ball.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::{cos, ln, norm, powf, sqrt};

pub const DEFAULT_RADIUS: f64 = 1e-3;
pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_SEED: u64 = 42;

pub struct BallSampler {
    rng: ChaCha8Rng,
}

impl BallSampler {
    pub fn new(seed: u64) -> Self {
        BallSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        sqrt(-2.0 * ln(u1)) * cos(core::f64::consts::TAU * u2)
    }

    /// A point uniformly distributed in the ball of `radius` around `center`.
    pub fn ball_point(&mut self, center: &[f64], radius: f64) -> Vec<f64> {
        let n = center.len();
        if n == 0 {
            return Vec::new();
        }
        let mut dir: Vec<f64> = (0..n).map(|_| self.normal()).collect();
        let mut nd = norm(&dir);
        while nd == 0.0 {
            dir = (0..n).map(|_| self.normal()).collect();
            nd = norm(&dir);
        }
        let r = radius * powf(self.uniform(), 1.0 / n as f64);
        center.iter().zip(&dir).map(|(c, d)| c + r * d / nd).collect()
    }
}

pub fn ball_samples(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = BallSampler::new(seed);
    (0..count).map(|_| s.ball_point(center, radius)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::dist;

    #[test]
    fn samples_stay_in_ball_and_repeat() {
        let c = [1.0, -2.0, 0.5];
        let a = ball_samples(&c, 1e-3, 50, 7);
        assert!(a.iter().all(|x| dist(x, &c) <= 1e-3));
        assert_eq!(a, ball_samples(&c, 1e-3, 50, 7));
        assert_ne!(a, ball_samples(&c, 1e-3, 50, 8));
    }
}
