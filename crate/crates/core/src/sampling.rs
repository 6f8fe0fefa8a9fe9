//! Deterministic quasi-random point sets.
//!
//! Points come from a Halton sequence with a Cranley–Patterson rotation drawn
//! from the seed, so two samplers built with the same `(dim, seed)` produce the
//! same stream and different seeds decorrelate the streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * scale;
        index /= b;
        scale *= inv;
    }
    out
}

#[derive(Debug, Clone)]
pub struct QuasiSampler {
    dim: usize,
    shift: Vec<f64>,
    next: u64,
}

impl QuasiSampler {
    /// Panics if `dim` exceeds the number of tabulated Halton bases (16).
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "quasi sampler supports at most {} dimensions",
            PRIMES.len()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self {
            dim,
            shift,
            next: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Next point of the rotated sequence in `[0, 1)^dim`.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let idx = self.next;
        self.next += 1;
        (0..self.dim)
            .map(|d| {
                let v = radical_inverse(idx, PRIMES[d]) + self.shift[d];
                v - v.floor()
            })
            .collect()
    }

    /// Next point of the sequence mapped to `[-1, 1]^dim`.
    pub fn next_cube(&mut self) -> Vec<f64> {
        self.next_unit().into_iter().map(|v| 2.0 * v - 1.0).collect()
    }

    /// Next point inside the closed unit ball (rejection from the cube).
    pub fn next_in_unit_ball(&mut self) -> Vec<f64> {
        loop {
            let p = self.next_cube();
            if norm(&p) <= 1.0 {
                return p;
            }
        }
    }

    /// Next point on the unit sphere.
    pub fn next_on_unit_sphere(&mut self) -> Vec<f64> {
        loop {
            let p = self.next_in_unit_ball();
            let n = norm(&p);
            if n > 1e-3 {
                return p.into_iter().map(|v| v / n).collect();
            }
        }
    }
}

/// `count` points of the closed ball `B(center, radius)`; half of them are pushed to the
/// boundary sphere so that suprema attained on the boundary are seen.
pub fn ball_points(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = QuasiSampler::new(center.len(), seed);
    (0..count)
        .map(|i| {
            let dir = if i % 2 == 0 {
                s.next_in_unit_ball()
            } else {
                s.next_on_unit_sphere()
            };
            center
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + radius * d)
                .collect()
        })
        .collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(0, 3), 0.0);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = QuasiSampler::new(3, 7);
        let mut b = QuasiSampler::new(3, 7);
        for _ in 0..50 {
            assert_eq!(a.next_unit(), b.next_unit());
        }
        let mut c = QuasiSampler::new(3, 8);
        assert_ne!(a.next_unit(), c.next_unit());
    }

    #[test]
    fn ball_points_stay_in_ball() {
        let pts = ball_points(&[1.0, -1.0], 0.5, 200, 3);
        assert!(pts.iter().all(|p| dist(p, &[1.0, -1.0]) <= 0.5 + 1e-12));
        let on_sphere = pts
            .iter()
            .filter(|p| (dist(p, &[1.0, -1.0]) - 0.5).abs() < 1e-12)
            .count();
        assert_eq!(on_sphere, 100);
    }

    #[test]
    fn one_dimensional_sphere_is_plus_minus_one() {
        let mut s = QuasiSampler::new(1, 0);
        for _ in 0..20 {
            let p = s.next_on_unit_sphere();
            assert_eq!(p[0].abs(), 1.0);
        }
    }
}
